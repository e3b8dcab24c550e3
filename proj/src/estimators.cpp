#include "sketchavg/estimators.hpp"

#include <cmath>
#include <string>

#include "sketchavg/error.hpp"

namespace sketchavg {
namespace {

std::string md(std::int64_t m, std::int64_t d) {
  return "(m=" + std::to_string(m) + ", d=" + std::to_string(d) + ")";
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string(name) + " must be positive and finite");
}

}  // namespace

std::string_view to_string(Regime regime) {
  return regime == Regime::ridge ? "ridge" : "newton";
}

double theta1(std::int64_t m, std::int64_t d) {
  if (d < 1 || m <= d + 1) throw MomentUndefined("theta1 undefined: need m > d + 1 " + md(m, d));
  const double mf = static_cast<double>(m);
  return mf / static_cast<double>(m - d - 1);
}

double theta2(std::int64_t m, std::int64_t d) {
  if (d < 1 || m <= d + 3) throw MomentUndefined("theta2 undefined: need m > d + 3 " + md(m, d));
  const double mf = static_cast<double>(m);
  // Factor by factor so that no intermediate exceeds the magnitude of the result much.
  return (mf / static_cast<double>(m - d)) * (mf / static_cast<double>(m - d - 1)) *
         (static_cast<double>(m - 1) / static_cast<double>(m - d - 3));
}

MomentPair moments(std::int64_t m, std::int64_t d) {
  return MomentPair{theta1(m, d), theta2(m, d), m, d};
}

double theta3(double gamma, double lam) {
  require_positive(gamma, "theta3: gamma");
  if (!(lam >= 0.0) || !std::isfinite(lam)) throw Error("theta3: lambda must be >= 0");
  if (lam == 0.0) {
    if (gamma < 1.0) return 1.0 / (1.0 - gamma);
    throw MomentUndefined("theta3 limit undefined at lambda=0 for gamma >= 1 (gamma=" +
                          std::to_string(gamma) + ")");
  }
  // Positive root t of gamma*lam*t^2 + (lam - gamma + 1)*t - 1 = 0, written in
  // whichever of the two algebraically equal forms avoids cancellation.
  const double b = lam - gamma + 1.0;
  const double disc = std::sqrt(b * b + 4.0 * lam * gamma);
  if (b > 0.0) return 2.0 / (b + disc);
  return (disc - b) / (2.0 * lam * gamma);
}

double zero_bias_residual_ridge(double lambda1, double lambda2, double gamma, double sigma) {
  require_positive(lambda2, "lambda2");
  require_positive(sigma, "sigma");
  const double s2 = sigma * sigma;
  return lambda1 - lambda2 * theta3(gamma, lambda2 / s2) * (1.0 + lambda1 / s2);
}

bool ridge_correction_feasible(double lambda1, std::int64_t d, std::int64_t m, double sigma) {
  if (m > d) return true;
  const double gamma = static_cast<double>(d) / static_cast<double>(m);
  return lambda1 >= sigma * sigma * (gamma - 1.0);
}

double lambda2_star_ridge(double lambda1, std::int64_t d, std::int64_t m, double sigma) {
  require_positive(sigma, "sigma");
  if (d < 1 || m < 1) throw ShapeError("lambda2_star_ridge: d and m must be >= 1");
  if (!(lambda1 >= 0.0)) throw Error("lambda2_star_ridge: lambda1 must be >= 0");
  const double s2 = sigma * sigma;
  const double gamma = static_cast<double>(d) / static_cast<double>(m);
  if (!ridge_correction_feasible(lambda1, d, m, sigma)) {
    throw Infeasible("no unbiased lambda2 exists: m <= d requires lambda1 >= sigma^2 (d/m - 1) = " +
                     std::to_string(s2 * (gamma - 1.0)) + ", got lambda1=" +
                     std::to_string(lambda1) + " " + md(m, d));
  }
  return lambda1 * (1.0 - gamma * s2 / (s2 + lambda1));
}

double lambda2_ridge_as_printed(double lambda1, std::int64_t d, std::int64_t m, double sigma) {
  require_positive(sigma, "sigma");
  const double gamma = static_cast<double>(d) / static_cast<double>(m);
  return lambda1 - gamma / (1.0 + lambda1 / (sigma * sigma));
}

double lambda2_star_newton(double lambda1, std::int64_t d, std::int64_t m, double sigma) {
  require_positive(sigma, "sigma");
  if (d < 1 || m < 1) throw ShapeError("lambda2_star_newton: d and m must be >= 1");
  if (!(lambda1 >= 0.0)) throw Error("lambda2_star_newton: lambda1 must be >= 0");
  const double s2 = sigma * sigma;
  const double gamma = static_cast<double>(d) / static_cast<double>(m);
  return (lambda1 + s2 * gamma) / (1.0 + gamma / (1.0 + lambda1 / s2));
}

StepScaling step_scalings(std::int64_t m, std::int64_t d) {
  if (d < 1 || m <= d + 3) {
    throw MomentUndefined("step scalings undefined: need m > d + 3 " + md(m, d));
  }
  const double mf = static_cast<double>(m);
  const double unbiased = static_cast<double>(m - d - 1) / mf;
  const double minvar =
      (static_cast<double>(m - d) / mf) * (static_cast<double>(m - d - 3) / (mf - 1.0));
  return StepScaling{unbiased, minvar, m, d};
}

double ihs_rate(std::int64_t q, std::int64_t m, std::int64_t d) {
  if (q < 1) throw Error("ihs_rate: q must be >= 1");
  if (d < 1 || m <= d + 3) throw MomentUndefined("ihs_rate undefined: need m > d + 3 " + md(m, d));
  // theta2 / theta1^2 = (m-1)(m-d-1) / ((m-d)(m-d-3))
  const double ratio = (static_cast<double>(m - 1) / static_cast<double>(m - d)) *
                       (static_cast<double>(m - d - 1) / static_cast<double>(m - d - 3));
  return (ratio - 1.0) / static_cast<double>(q);
}

double predict_iterations(double eps, std::int64_t q, std::int64_t m, std::int64_t d) {
  if (!(eps > 0.0 && eps <= 1.0)) throw Error("predict_iterations: need 0 < eps <= 1");
  const double per_worker = ihs_rate(1, m, d);
  const double denom = std::log(static_cast<double>(q)) - std::log(per_worker);
  if (!(denom > 0.0)) {
    throw Infeasible("averaging insufficient for contraction: log q - log(theta2/theta1^2 - 1) = " +
                     std::to_string(denom) + " <= 0 (q=" + std::to_string(q) + ", " + md(m, d) +
                     ")");
  }
  return std::log(1.0 / eps) / denom;
}

std::vector<WorkerCorrection> per_worker_corrections(double lambda1, std::int64_t d,
                                                     std::span<const std::int64_t> m_list,
                                                     double sigma, Regime regime) {
  std::vector<WorkerCorrection> out;
  out.reserve(m_list.size());
  for (std::size_t k = 0; k < m_list.size(); ++k) {
    const std::int64_t m = m_list[k];
    try {
      WorkerCorrection wc{};
      double l2 = 0.0;
      if (regime == Regime::ridge) {
        l2 = lambda2_star_ridge(lambda1, d, m, sigma);
      } else {
        l2 = lambda2_star_newton(lambda1, d, m, sigma);
        if (lambda1 == 0.0) wc.scaling = step_scalings(m, d);
      }
      wc.correction = BiasCorrection{lambda1, l2, sigma, d, m, regime, l2 < 0.0};
      out.push_back(wc);
    } catch (const Infeasible& e) {
      throw Infeasible("worker " + std::to_string(k) + ": " + e.what(),
                       static_cast<std::ptrdiff_t>(k));
    } catch (const MomentUndefined& e) {
      throw Infeasible("worker " + std::to_string(k) + ": " + e.what(),
                       static_cast<std::ptrdiff_t>(k));
    }
  }
  return out;
}

}  // namespace sketchavg
