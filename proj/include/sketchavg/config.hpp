#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchavg/problems.hpp"
#include "sketchavg/sketch.hpp"
#include "sketchavg/solvers.hpp"

namespace sketchavg {

enum class Algorithm { ihs, ridge_average, newton_sketch };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct ProblemSection {
  ProblemKind kind = ProblemKind::lstsq;
  std::int64_t n = 1000;
  std::int64_t d = 50;
  double lambda1 = 0.0;
  double noise = 0.0;
  bool identical_sv = false;
  double sigma = 1.0;
  double a_scale = 1.0;
  double bound = 1.0;
  double c_scale = 1.0;

  bool operator==(const ProblemSection&) const = default;
};

struct ClusterSection {
  /// Worker counts to sweep; ignored when m_list is given (q = its length).
  std::vector<std::int64_t> q{1};
  std::int64_t m = 0;
  std::vector<std::int64_t> m_list;
  std::vector<SketchKind> sketches{SketchKind::gaussian};
  std::int64_t s = 1;
  std::int64_t m2 = 0;
  SketchKind inner = SketchKind::gaussian;
  bool partitioned = false;

  bool operator==(const ClusterSection&) const = default;
};

struct SolverSection {
  Algorithm algorithm = Algorithm::ihs;
  int iterations = 10;
  double eps = 0.0;
  std::optional<double> mu;
  std::vector<RidgeCorrection> corrections{RidgeCorrection::zero_bias};
  /// Newton sketch: "corrected" and/or "vanilla" regularization of the sketched systems.
  std::vector<std::string> lambda2{"corrected"};
  std::vector<StepPolicy> policies{StepPolicy::unbiased};
  /// Extra fixed step scalings swept alongside `policies`.
  std::vector<double> alphas;
  std::optional<SigmaMode> sigma_mode;
  std::optional<double> sigma;
  std::optional<double> alpha1;
  std::optional<bool> line_search;

  bool operator==(const SolverSection&) const = default;
};

struct OutputSection {
  int trials = 1;
  std::uint64_t seed = 0;
  std::string dir = "out";
  bool svg = false;
  unsigned threads = 1;

  bool operator==(const OutputSection&) const = default;
};

struct ExperimentConfig {
  ProblemSection problem;
  ClusterSection cluster;
  SolverSection solver;
  OutputSection output;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Invalid config: the message names the section, key, and line when known.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Parses the sectioned key = value format ([problem], [cluster], [solver],
/// [output]; '#' comments; lists in brackets; strings optionally quoted).
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& config);

/// Cross-field checks (sizes, sketch feasibility, correction feasibility).
/// Throws ConfigError, or the estimator error verbatim for infeasible corrections.
void validate(const ExperimentConfig& config);

}  // namespace sketchavg
