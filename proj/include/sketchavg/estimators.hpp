#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sketchavg {

/// Inverse-Wishart moments: E[(U^T S^T S U)^{-1}] = theta1 I and
/// E[(U^T S^T S U)^{-2}] = theta2 I for Gaussian S (m x n) and orthonormal U (n x d).
struct MomentPair {
  double theta1;
  double theta2;
  std::int64_t m;
  std::int64_t d;
};

enum class Regime { ridge, newton };

std::string_view to_string(Regime regime);

/// Zero-bias regularization for the sketched subproblem of one worker.
struct BiasCorrection {
  double lambda1;
  double lambda2_star;
  double sigma;
  std::int64_t d;
  std::int64_t m;
  Regime regime;
  /// Set when lambda2_star < 0: the sketched Hessian may be indefinite.
  bool indefinite_advisory = false;
};

struct StepScaling {
  double alpha_unbiased;  // 1 / theta1
  double alpha_minvar;    // theta1 / theta2
  std::int64_t m;
  std::int64_t d;
};

/// theta1 = m / (m - d - 1). Requires m > d + 1.
double theta1(std::int64_t m, std::int64_t d);
/// theta2 = m^2 (m - 1) / ((m - d)(m - d - 1)(m - d - 3)). Requires m > d + 3.
double theta2(std::int64_t m, std::int64_t d);
/// Both moments; requires m > d + 3.
MomentPair moments(std::int64_t m, std::int64_t d);

/// Limit of E[(U^T S^T S U + lam I)^{-1}] / I for aspect ratio gamma = d/m.
/// lam = 0 takes the limit branch 1/(1 - gamma), defined only for gamma < 1.
double theta3(double gamma, double lam);

/// lambda1 - lambda2 * theta3(gamma, lambda2/sigma^2) * (1 + lambda1/sigma^2);
/// zero exactly when lambda2 removes the bias of a single sketched ridge solution.
double zero_bias_residual_ridge(double lambda1, double lambda2, double gamma, double sigma);

/// Whether a zero-bias lambda2 exists for sketched ridge regression.
bool ridge_correction_feasible(double lambda1, std::int64_t d, std::int64_t m, double sigma);

/// Root of zero_bias_residual_ridge: lambda1 * (1 - (d/m) sigma^2 / (sigma^2 + lambda1)).
/// Throws Infeasible when m <= d and lambda1 < sigma^2 (d/m - 1).
double lambda2_star_ridge(double lambda1, std::int64_t d, std::int64_t m, double sigma);

/// The misprinted closed form lambda1 - (d/m) / (1 + lambda1/sigma^2). Kept for
/// comparison only; it does not zero the ridge bias condition.
double lambda2_ridge_as_printed(double lambda1, std::int64_t d, std::int64_t m, double sigma);

/// (lambda1 + sigma^2 d/m) / (1 + (d/m) / (1 + lambda1/sigma^2)); makes
/// theta3(d/m, lambda2/sigma^2) = 1 / (1 + lambda1/sigma^2). Always feasible.
double lambda2_star_newton(double lambda1, std::int64_t d, std::int64_t m, double sigma);

/// Unbiased (1/theta1) and minimum-variance (theta1/theta2) direction scalings.
StepScaling step_scalings(std::int64_t m, std::int64_t d);

/// Expected one-step contraction of ||A(x_t - x*)||^2 for averaged IHS with
/// q Gaussian workers and step 1/theta1: (theta2/theta1^2 - 1) / q.
double ihs_rate(std::int64_t q, std::int64_t m, std::int64_t d);

/// Iterations for averaged IHS to reach expected relative error eps:
/// log(1/eps) / (log q - log(theta2/theta1^2 - 1)). Real-valued; round up.
double predict_iterations(double eps, std::int64_t q, std::int64_t m, std::int64_t d);

struct WorkerCorrection {
  BiasCorrection correction;
  std::optional<StepScaling> scaling;  // newton regime with lambda1 = 0
};

/// One correction per worker sketch size. Infeasible sizes raise Infeasible
/// naming the worker index.
std::vector<WorkerCorrection> per_worker_corrections(double lambda1, std::int64_t d,
                                                     std::span<const std::int64_t> m_list,
                                                     double sigma, Regime regime);

}  // namespace sketchavg
