#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sketchavg/cluster.hpp"
#include "sketchavg/problems.hpp"

namespace sketchavg {

/// One row of a convergence trace. cost_gap is (f(x_t) - f*) / |f*|, or the
/// plain difference when f* is zero.
struct TraceRecord {
  int t = 0;
  double cost_gap = 0.0;
  double errA_sq = 0.0;    // ||A (x_t - x*)||^2
  double rel_x_err = 0.0;  // ||x_t - x*|| / ||x*||
  std::int64_t comm_scalars = 0;
  double wall_time_s = 0.0;
};

using ConvergenceTrace = std::vector<TraceRecord>;

/// The exact optimum used to score iterates.
struct Reference {
  Vector x_star;
  double f_star = 0.0;
};

Reference make_reference(const ProblemModel& p);
TraceRecord measure(const ProblemModel& p, const Reference& ref, const Vector& x, int t,
                    std::int64_t comm_scalars, double wall_time_s);

/// What one worker actually used: its sketch size, the regularization of its
/// sketched subproblem, and the scaling applied to its direction.
struct WorkerUsage {
  std::size_t worker = 0;
  std::int64_t m = 0;
  double lambda2 = 0.0;
  double alpha = 1.0;
};

struct SolverReport {
  std::string algorithm;
  Vector x;
  ConvergenceTrace trace;
  std::vector<WorkerUsage> workers;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> ihs_rate;
  std::optional<double> predicted_iterations;
  std::optional<int> observed_iterations;
  /// dist_ridge_average only: record t = j scores the average of workers 0..j-1.
  ConvergenceTrace partial;
  std::vector<std::string> warnings;
  int rejected_steps = 0;
  bool converged = false;
};

/// Exact optimum: normal equations for lstsq/ridge, damped Newton with
/// backtracking for logistic/barrier.
Vector solve_direct(const ProblemModel& p);

struct IhsOptions {
  int iterations = 10;
  /// Step size; defaults to 1/theta1(m_k, d) per worker.
  std::optional<double> mu;
  /// When positive, observed_iterations is the first t with
  /// errA_sq(t) <= eps * errA_sq(0) and predicted_iterations is filled in.
  double eps = 0.0;
};

/// Distributed iterative Hessian sketch for lstsq (and ridge) starting at x = 0.
SolverReport dist_ihs(const ProblemModel& p, const ClusterConfig& cluster, const IhsOptions& options,
                      const Reference* ref = nullptr);

enum class RidgeCorrection { zero_bias, printed, vanilla };

std::string_view to_string(RidgeCorrection c);
std::optional<RidgeCorrection> parse_ridge_correction(std::string_view name);

struct RidgeOptions {
  RidgeCorrection correction = RidgeCorrection::zero_bias;
  /// Defaults to the mean singular value of A.
  std::optional<double> sigma;
};

/// One-shot averaging of independently sketched ridge solutions.
SolverReport dist_ridge_average(const ProblemModel& p, const ClusterConfig& cluster,
                                const RidgeOptions& options, const Reference* ref = nullptr);

enum class StepPolicy { unbiased, min_variance, fixed };

std::string_view to_string(StepPolicy policy);
std::optional<StepPolicy> parse_step_policy(std::string_view name);

struct NewtonOptions {
  StepPolicy policy = StepPolicy::unbiased;
  double fixed_alpha = 1.0;
  /// Regularized problems: lambda2 from lambda2_star_newton when set, lambda2 = lambda1 otherwise.
  bool bias_corrected = true;
  double eps = 0.0;
  int max_iters = 20;
  std::optional<SigmaMode> sigma_mode;
  /// Outer step alpha1. Unset: 1 for lstsq/ridge, Armijo backtracking otherwise.
  std::optional<double> alpha1;
  std::optional<bool> line_search;
};

/// Distributed Newton sketch starting at x = 0.
SolverReport dist_newton_sketch(const ProblemModel& p, const ClusterConfig& cluster,
                                const NewtonOptions& options, const Reference* ref = nullptr);

struct DirectionStats {
  double alpha = 1.0;
  double bias_norm = 0.0;    // ||mean of H^{1/2}(dhat - d*)||
  double bias_se = 0.0;      // sqrt(trace(cov) / trials)
  double variance = 0.0;     // mean of ||H^{1/2}(dhat - d*)||^2
  double variance_se = 0.0;
};

/// Monte Carlo over fresh sketches of the single-worker direction
/// dhat = -alpha (SH^T SH + lambda2 I)^{-1} g against the exact direction
/// d* = -(H^T H + lambda1 I)^{-1} g, measured in the Hessian norm. All alphas
/// share the same sketches. Gaussian sketches are rotation invariant, so for
/// them `h_half` is first compressed to its d x d triangular factor.
std::vector<DirectionStats> single_sketch_direction_stats(const Matrix& h_half, const Vector& g,
                                                          const SketchSpec& sketch, int trials,
                                                          std::span<const double> alphas,
                                                          double lambda1, double lambda2,
                                                          RngStream& rng);

}  // namespace sketchavg
