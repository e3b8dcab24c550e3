#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "sketchavg/rng.hpp"
#include "sketchavg/types.hpp"

namespace sketchavg {

enum class ProblemKind { lstsq, ridge, logistic, barrier };

std::string_view to_string(ProblemKind kind);
std::optional<ProblemKind> parse_problem_kind(std::string_view name);

/// An optimization problem over x in R^d with data matrix A (n x d).
///
/// `target` holds b (lstsq, ridge), the 0/1 labels y (logistic), or the
/// center c in R^d (barrier). Objectives:
///   lstsq     1/2 ||Ax - b||^2
///   ridge     1/2 ||Ax - b||^2 + lambda1/2 ||x||^2
///   logistic  -sum(y log p + (1-y) log(1-p)) + lambda1/2 ||x||^2,  p = sigmoid(Ax)
///   barrier   -sum log(bound - a_i x) - sum log(a_i x + bound)
///             + lambda1 ||x||^2 - 2 lambda1 c^T x + lambda1 ||c||^2
struct ProblemModel {
  ProblemKind kind = ProblemKind::lstsq;
  Matrix A;
  Vector target;
  double lambda1 = 0.0;
  double bound = 0.0;  // barrier only: ||Ax||_inf < bound
  std::optional<Vector> planted;

  Index n() const { return A.rows(); }
  Index d() const { return A.cols(); }
};

/// Throws ShapeError/Error if dimensions or parameters are inconsistent.
void validate(const ProblemModel& p);

/// H = half^T half + reg_mult * lambda1 * I.
struct HessianFactor {
  Matrix half;
  double reg_mult = 0.0;
  double lambda1 = 0.0;
  /// Per-row scaling applied to the data to form `half` (1 for lstsq/ridge,
  /// sqrt(p(1-p)) for logistic, |1/margin| for barrier).
  Vector row_scale;

  /// The regularization actually present in the Hessian.
  double regularization() const { return reg_mult * lambda1; }
};

enum class SigmaMode { mean_sv, mean_diag, min_sv };

std::string_view to_string(SigmaMode mode);
std::optional<SigmaMode> parse_sigma_mode(std::string_view name);
SigmaMode default_sigma_mode(ProblemKind kind);

double objective(const ProblemModel& p, const Vector& x);
Vector gradient(const ProblemModel& p, const Vector& x);
HessianFactor hessian_factor(const ProblemModel& p, const Vector& x);
/// Dense d x d Hessian assembled from the factor.
Matrix hessian(const ProblemModel& p, const Vector& x);
double sigma_heuristic(const ProblemModel& p, const Vector& x, SigmaMode mode);
double sigma_heuristic(const HessianFactor& h, SigmaMode mode);

/// Barrier margins bound -+ (Ax)_i stacked as [upper; lower]; all must be > 0.
Vector barrier_margins(const ProblemModel& p, const Vector& x);

struct GenerateOptions {
  double lambda1 = 0.0;
  bool identical_sv = false;
  double sigma = 1.0;    // common singular value when identical_sv
  double a_scale = 1.0;  // entry standard deviation of Gaussian A otherwise
  double bound = 1.0;    // barrier
  double c_scale = 1.0;  // barrier center entry standard deviation
};

/// Random instance: Gaussian (or identical-singular-value) A, unit-norm planted
/// x0, b = A x0 + noise * eps for lstsq/ridge, Bernoulli(sigmoid(A x0)) labels
/// for logistic, Gaussian c for barrier.
ProblemModel generate_problem(ProblemKind kind, Index n, Index d, double noise, RngStream& rng,
                              const GenerateOptions& options = {});

struct ProblemManifest {
  std::uint64_t seed = 0;
  double noise = 0.0;
  GenerateOptions options;
};

/// Writes A.samx, target.samx, planted.samx (if any) and manifest.json into `dir`.
void save_problem(const std::filesystem::path& dir, const ProblemModel& p,
                  const ProblemManifest& manifest);
ProblemModel load_problem(const std::filesystem::path& dir);

}  // namespace sketchavg
