#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "sketchavg/config.hpp"
#include "sketchavg/solvers.hpp"

namespace sketchavg {

/// One curve of an experiment: a worker layout, a sketch kind and a solver variant.
struct Series {
  std::string name;
  std::vector<std::int64_t> m_list;
  SketchKind sketch = SketchKind::gaussian;
  std::string variant;
  RidgeCorrection correction = RidgeCorrection::zero_bias;
  bool corrected = true;
  StepPolicy policy = StepPolicy::unbiased;
  double alpha = 1.0;
};

/// Cartesian product worker layouts x sketch kinds x solver variants, in a fixed order.
std::vector<Series> expand_series(const ExperimentConfig& config);

/// The problem instance of a config, drawn from stream (seed, 0).
ProblemModel build_problem(const ExperimentConfig& config);

/// Cluster for one series and trial; all series of a trial share its seed.
ClusterConfig build_cluster(const ExperimentConfig& config, const Series& series, int trial);

SolverReport run_series(const ExperimentConfig& config, const ProblemModel& problem,
                        const Reference& ref, const Series& series, int trial);

struct AggregateRow {
  std::string series;
  int t = 0;
  int trials = 0;
  double cost_gap_mean = 0, cost_gap_se = 0;
  double errA_sq_mean = 0, errA_sq_se = 0;
  double rel_x_err_mean = 0, rel_x_err_se = 0;
  std::int64_t comm_scalars = 0;
};

struct ExperimentResult {
  std::vector<Series> series;
  /// reports[s][trial]
  std::vector<std::vector<SolverReport>> reports;
  std::vector<AggregateRow> aggregate;
  nlohmann::ordered_json summary;
};

/// The curve a report contributes: partial averages for ridge averaging, the
/// iteration trace otherwise.
const ConvergenceTrace& curve(const SolverReport& report);

/// Mean and standard error per t across trials. Shorter traces (early
/// convergence) repeat their last record.
std::vector<AggregateRow> aggregate(const std::string& name, const std::vector<SolverReport>& trials);

/// Runs every series for every trial; `threads` parallelizes over (series, trial)
/// pairs and leaves results independent of the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads);

/// Columns: series,t,trials,cost_gap_mean,cost_gap_se,errA_sq_mean,errA_sq_se,
/// rel_x_err_mean,rel_x_err_se,comm_scalars. No timing, so identical inputs give identical bytes.
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

/// trace_<series>_trial<i>.csv, aggregate.csv, summary.json, config.toml and
/// optional SVG charts under `dir`.
void write_experiment(const ExperimentResult& result, const ExperimentConfig& config,
                      const std::filesystem::path& dir);

}  // namespace sketchavg
