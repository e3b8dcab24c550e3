#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "sketchavg/solvers.hpp"

namespace sketchavg {

/// Header: t,cost_gap,errA_sq,rel_x_err,comm_scalars,wall_time_s
void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const ConvergenceTrace& trace);

/// Everything in the report except the trace and the iterate itself.
nlohmann::ordered_json report_json(const SolverReport& report);

/// Writes `j` pretty-printed, reporting the path on failure.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace sketchavg
