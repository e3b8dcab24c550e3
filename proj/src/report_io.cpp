#include "sketchavg/report_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "sketchavg/error.hpp"

namespace sketchavg {
namespace {

nlohmann::ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
  out << "t,cost_gap,errA_sq,rel_x_err,comm_scalars,wall_time_s\n";
  out << std::setprecision(17);
  for (const auto& r : trace) {
    out << r.t << ',' << r.cost_gap << ',' << r.errA_sq << ',' << r.rel_x_err << ','
        << r.comm_scalars << ',' << r.wall_time_s << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const ConvergenceTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'", false);
  write_trace_csv(out, trace);
  if (!out) throw Error("write failed for '" + path.string() + "'", false);
}

nlohmann::ordered_json report_json(const SolverReport& report) {
  nlohmann::ordered_json j;
  j["algorithm"] = report.algorithm;
  j["iterations"] = report.trace.empty() ? 0 : report.trace.back().t;
  j["converged"] = report.converged;
  j["sigma"] = number_or_null(report.sigma);
  auto& workers = j["workers"] = nlohmann::ordered_json::array();
  for (const auto& w : report.workers) {
    workers.push_back({{"worker", w.worker}, {"m", w.m}, {"lambda2", w.lambda2}, {"alpha", w.alpha}});
  }
  j["predicted"] = {
      {"ihs_rate", report.ihs_rate ? nlohmann::ordered_json(*report.ihs_rate) : nullptr},
      {"iterations",
       report.predicted_iterations ? nlohmann::ordered_json(*report.predicted_iterations) : nullptr},
  };
  nlohmann::ordered_json observed;
  if (report.trace.size() >= 2 && report.trace[0].errA_sq > 0.0) {
    observed["contraction"] = report.trace[1].errA_sq / report.trace[0].errA_sq;
  } else {
    observed["contraction"] = nullptr;
  }
  observed["iterations"] =
      report.observed_iterations ? nlohmann::ordered_json(*report.observed_iterations) : nullptr;
  if (!report.trace.empty()) {
    observed["final_cost_gap"] = number_or_null(report.trace.back().cost_gap);
    observed["final_rel_x_err"] = number_or_null(report.trace.back().rel_x_err);
    observed["comm_scalars"] = report.trace.back().comm_scalars;
  }
  j["observed"] = observed;
  if (!report.partial.empty()) {
    std::vector<double> curve;
    for (const auto& r : report.partial) curve.push_back(r.rel_x_err);
    j["partial_rel_x_err"] = curve;
  }
  j["rejected_steps"] = report.rejected_steps;
  j["warnings"] = report.warnings;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'", false);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'", false);
}

}  // namespace sketchavg
