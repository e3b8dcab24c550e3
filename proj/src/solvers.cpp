#include "sketchavg/solvers.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <utility>

#include "sketchavg/estimators.hpp"
#include "sketchavg/linalg.hpp"

namespace sketchavg {
namespace {

constexpr double kArmijoC = 1e-4;
constexpr double kBacktrack = 0.5;
constexpr int kMaxBacktracks = 60;
constexpr std::size_t kMaxWarnings = 20;

constexpr std::array<std::pair<RidgeCorrection, std::string_view>, 3> kCorrections{{
    {RidgeCorrection::zero_bias, "zero-bias"},
    {RidgeCorrection::printed, "printed"},
    {RidgeCorrection::vanilla, "vanilla"},
}};

constexpr std::array<std::pair<StepPolicy, std::string_view>, 3> kPolicies{{
    {StepPolicy::unbiased, "unbiased"},
    {StepPolicy::min_variance, "min-variance"},
    {StepPolicy::fixed, "fixed"},
}};

bool is_quadratic(ProblemKind kind) { return kind == ProblemKind::lstsq || kind == ProblemKind::ridge; }

void add_warning(SolverReport& report, std::string message) {
  if (report.warnings.size() < kMaxWarnings) report.warnings.push_back(std::move(message));
}

/// f(x) or +inf outside the barrier domain.
double objective_or_inf(const ProblemModel& p, const Vector& x) {
  try {
    return objective(p, x);
  } catch (const DomainViolation&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Armijo backtracking along `dir` starting from `start`. Returns 0 when no
/// acceptable step is found.
double backtrack(const ProblemModel& p, const Vector& x, double fx, const Vector& dir, double slope,
                 double start) {
  double a = start;
  for (int i = 0; i < kMaxBacktracks; ++i, a *= kBacktrack) {
    const double f_new = objective_or_inf(p, x + a * dir);
    if (f_new <= fx + kArmijoC * a * slope) return a;
  }
  return 0.0;
}

/// Largest step a <= start (halving) that keeps x + a dir strictly feasible.
double shrink_to_domain(const ProblemModel& p, const Vector& x, const Vector& dir, double start) {
  double a = start;
  for (int i = 0; i < kMaxBacktracks; ++i, a *= kBacktrack) {
    if (barrier_margins(p, x + a * dir).minCoeff() > 0.0) return a;
  }
  return 0.0;
}

template <typename Clock>
double seconds_since(typename Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string moment_hint(const MomentUndefined& e, std::size_t worker, const char* what) {
  return "worker " + std::to_string(worker) + ": " + e.what() + "; " + what;
}

Vector newton_optimum(const ProblemModel& p) {
  Vector x = Vector::Zero(p.d());
  Vector g = gradient(p, x);
  const double tol = 1e-10 * (1.0 + g.norm());
  double fx = objective(p, x);
  for (int it = 0; it < 200 && g.norm() > tol; ++it) {
    const Vector dir = -solve_spd(hessian(p, x), g);
    const double slope = g.dot(dir);
    const double a = backtrack(p, x, fx, dir, slope, 1.0);
    if (a == 0.0) break;
    x += a * dir;
    fx = objective(p, x);
    g = gradient(p, x);
  }
  const double gn = g.norm();
  if (!(gn <= 1e2 * tol)) {
    throw Error("solve_direct: Newton iteration stalled at gradient norm " + std::to_string(gn),
                false);
  }
  return x;
}

}  // namespace

std::string_view to_string(RidgeCorrection c) {
  for (const auto& [k, n] : kCorrections)
    if (k == c) return n;
  return "unknown";
}

std::optional<RidgeCorrection> parse_ridge_correction(std::string_view name) {
  for (const auto& [k, n] : kCorrections)
    if (n == name) return k;
  return std::nullopt;
}

std::string_view to_string(StepPolicy policy) {
  for (const auto& [k, n] : kPolicies)
    if (k == policy) return n;
  return "unknown";
}

std::optional<StepPolicy> parse_step_policy(std::string_view name) {
  for (const auto& [k, n] : kPolicies)
    if (n == name) return k;
  return std::nullopt;
}

Vector solve_direct(const ProblemModel& p) {
  validate(p);
  switch (p.kind) {
    case ProblemKind::lstsq: {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p.A);
      if (qr.rank() < p.d()) {
        throw Error("solve_direct: normal equations are singular (rank " + std::to_string(qr.rank()) +
                    " < d=" + std::to_string(p.d()) + ")");
      }
      return qr.solve(p.target);
    }
    case ProblemKind::ridge: {
      Matrix gram = p.A.transpose() * p.A;
      gram.diagonal().array() += p.lambda1;
      try {
        return solve_spd(gram, p.A.transpose() * p.target);
      } catch (const NotPositiveDefinite& e) {
        throw Error(std::string("solve_direct: normal equations are singular: ") + e.what());
      }
    }
    case ProblemKind::logistic:
    case ProblemKind::barrier:
      try {
        return newton_optimum(p);
      } catch (const NotPositiveDefinite& e) {
        throw Error(std::string("solve_direct: singular Hessian: ") + e.what());
      }
  }
  throw Error("unknown problem kind");
}

Reference make_reference(const ProblemModel& p) {
  Reference ref;
  ref.x_star = solve_direct(p);
  ref.f_star = objective(p, ref.x_star);
  return ref;
}

TraceRecord measure(const ProblemModel& p, const Reference& ref, const Vector& x, int t,
                    std::int64_t comm_scalars, double wall_time_s) {
  TraceRecord r;
  r.t = t;
  const double gap = objective(p, x) - ref.f_star;
  r.cost_gap = ref.f_star == 0.0 ? gap : gap / std::abs(ref.f_star);
  r.errA_sq = (p.A * (x - ref.x_star)).squaredNorm();
  const double xn = ref.x_star.norm();
  r.rel_x_err = xn > 0.0 ? (x - ref.x_star).norm() / xn : (x - ref.x_star).norm();
  r.comm_scalars = comm_scalars;
  r.wall_time_s = wall_time_s;
  return r;
}

SolverReport dist_ihs(const ProblemModel& p, const ClusterConfig& cluster, const IhsOptions& options,
                      const Reference* ref_in) {
  using Clock = std::chrono::steady_clock;
  validate(p);
  validate(cluster);
  if (!is_quadratic(p.kind)) throw Error("dist_ihs: requires a lstsq or ridge problem");
  if (options.iterations < 0) throw Error("dist_ihs: iterations must be >= 0");
  const Reference ref = ref_in ? *ref_in : make_reference(p);
  const Index d = p.d();
  const auto q = static_cast<std::int64_t>(cluster.q());
  const double reg = p.kind == ProblemKind::ridge ? p.lambda1 : 0.0;

  SolverReport report;
  report.algorithm = "ihs";
  for (std::size_t k = 0; k < cluster.q(); ++k) {
    WorkerUsage use{k, cluster.workers[k].m(), reg, 1.0};
    if (options.mu) {
      use.alpha = *options.mu;
    } else {
      try {
        use.alpha = 1.0 / theta1(use.m, d);
      } catch (const MomentUndefined& e) {
        throw MomentUndefined(moment_hint(e, k, "pass an explicit step size mu"));
      }
    }
    report.workers.push_back(use);
  }
  const bool homogeneous = std::all_of(cluster.workers.begin(), cluster.workers.end(),
                                       [&](const WorkerConfig& w) {
                                         return w.m() == cluster.workers.front().m() &&
                                                w.sketch.kind == SketchKind::gaussian;
                                       });
  if (homogeneous && !options.mu && cluster.workers.front().m() > d + 3) {
    report.ihs_rate = ihs_rate(q, cluster.workers.front().m(), d);
    if (options.eps > 0.0) {
      try {
        report.predicted_iterations = predict_iterations(options.eps, q, cluster.workers.front().m(), d);
      } catch (const Infeasible& e) {
        add_warning(report, e.what());
      }
    }
  }

  Vector x = Vector::Zero(d);
  std::int64_t comm = 0;
  report.trace.push_back(measure(p, ref, x, 0, comm, 0.0));
  const double err0 = report.trace.front().errA_sq;
  for (int t = 1; t <= options.iterations; ++t) {
    const auto start = Clock::now();
    const Vector g = gradient(p, x);
    RoundTiming timing;
    const auto dirs = run_cluster_round(
        cluster,
        [&](std::size_t k, const WorkerConfig& w) -> Vector {
          RngStream rng = w.stream.child(static_cast<std::uint64_t>(t));
          const Matrix sa = apply_sketch(w.sketch, p.A, rng);
          Matrix gram = Matrix::Zero(d, d);
          gram.selfadjointView<Eigen::Lower>().rankUpdate(sa.transpose());
          gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
          gram.diagonal().array() += reg;
          return -report.workers[k].alpha * solve_spd(gram, g);
        },
        &timing);
    Vector avg = Vector::Zero(d);
    for (const auto& dir : dirs) avg += dir;
    x += avg / static_cast<double>(q);
    comm += q * d;
    report.trace.push_back(measure(p, ref, x, t, comm, seconds_since<Clock>(start)));
    if (options.eps > 0.0 && !report.observed_iterations &&
        report.trace.back().errA_sq <= options.eps * err0) {
      report.observed_iterations = t;
    }
  }
  report.x = x;
  report.converged = report.observed_iterations.has_value();
  return report;
}

SolverReport dist_ridge_average(const ProblemModel& p, const ClusterConfig& cluster,
                                const RidgeOptions& options, const Reference* ref_in) {
  using Clock = std::chrono::steady_clock;
  validate(p);
  validate(cluster);
  if (p.kind != ProblemKind::ridge) throw Error("dist_ridge_average: requires a ridge problem");
  const Reference ref = ref_in ? *ref_in : make_reference(p);
  const Index d = p.d();
  const Index n = p.n();
  const auto q = static_cast<std::int64_t>(cluster.q());

  SolverReport report;
  report.algorithm = "ridge-average";
  report.sigma = options.sigma ? *options.sigma : singular_values(p.A).mean();
  const auto sizes = sketch_sizes(cluster);
  std::vector<WorkerCorrection> corrections;
  if (options.correction == RidgeCorrection::zero_bias) {
    corrections = per_worker_corrections(p.lambda1, d, sizes, report.sigma, Regime::ridge);
  }
  for (std::size_t k = 0; k < cluster.q(); ++k) {
    WorkerUsage use{k, sizes[k], p.lambda1, 1.0};
    if (options.correction == RidgeCorrection::zero_bias) {
      use.lambda2 = corrections[k].correction.lambda2_star;
      if (corrections[k].correction.indefinite_advisory) {
        add_warning(report, "worker " + std::to_string(k) + ": negative lambda2 " +
                                std::to_string(use.lambda2) + "; sketched system may be indefinite");
      }
    } else if (options.correction == RidgeCorrection::printed) {
      use.lambda2 = lambda2_ridge_as_printed(p.lambda1, d, sizes[k], report.sigma);
    }
    report.workers.push_back(use);
  }

  // Sketching [A b] applies the same S to both.
  Matrix ab(n, d + 1);
  ab.leftCols(d) = p.A;
  ab.col(d) = p.target;

  struct Local {
    Vector x;
    SolveDiagnostics diag;
  };
  const auto start = Clock::now();
  Vector x0 = Vector::Zero(d);
  report.trace.push_back(measure(p, ref, x0, 0, 0, 0.0));
  const auto locals = run_cluster_round(cluster, [&](std::size_t k, const WorkerConfig& w) {
    RngStream rng = w.stream.child(0);
    const Matrix sab = apply_sketch(w.sketch, ab, rng);
    const auto sa = sab.leftCols(d);
    Matrix gram = sa.transpose() * sa;
    gram.diagonal().array() += report.workers[k].lambda2;
    Local out;
    out.x = solve_symmetric(gram, sa.transpose() * sab.col(d), &out.diag);
    return out;
  });

  const double elapsed = seconds_since<Clock>(start);
  Vector sum = Vector::Zero(d);
  for (std::size_t k = 0; k < locals.size(); ++k) {
    if (locals[k].diag.indefinite) {
      add_warning(report, "worker " + std::to_string(k) + ": " + locals[k].diag.warning);
    }
    sum += locals[k].x;
    const auto j = static_cast<std::int64_t>(k + 1);
    report.partial.push_back(measure(p, ref, sum / static_cast<double>(j), static_cast<int>(j), j * d, elapsed));
  }
  report.x = sum / static_cast<double>(q);
  report.trace.push_back(measure(p, ref, report.x, 1, q * d, elapsed));
  report.converged = true;
  return report;
}

SolverReport dist_newton_sketch(const ProblemModel& p, const ClusterConfig& cluster,
                                const NewtonOptions& options, const Reference* ref_in) {
  using Clock = std::chrono::steady_clock;
  validate(p);
  validate(cluster);
  if (options.max_iters < 0) throw Error("dist_newton_sketch: max_iters must be >= 0");
  const Reference ref = ref_in ? *ref_in : make_reference(p);
  const Index d = p.d();
  const auto q = static_cast<std::int64_t>(cluster.q());
  const bool line_search = options.line_search.value_or(!is_quadratic(p.kind));
  const SigmaMode sigma_mode = options.sigma_mode.value_or(default_sigma_mode(p.kind));
  const bool regularized = p.kind != ProblemKind::lstsq && p.lambda1 > 0.0;
  const auto sizes = sketch_sizes(cluster);

  SolverReport report;
  report.algorithm = "newton-sketch";
  for (std::size_t k = 0; k < cluster.q(); ++k) {
    WorkerUsage use{k, sizes[k], 0.0, 1.0};
    if (options.policy == StepPolicy::fixed) {
      use.alpha = options.fixed_alpha;
    } else if (!regularized) {
      try {
        const StepScaling s = options.policy == StepPolicy::unbiased
                                  ? StepScaling{1.0 / theta1(sizes[k], d), 0.0, sizes[k], d}
                                  : step_scalings(sizes[k], d);
        use.alpha = options.policy == StepPolicy::unbiased ? s.alpha_unbiased : s.alpha_minvar;
      } catch (const MomentUndefined& e) {
        throw MomentUndefined(moment_hint(e, k, "use a fixed step policy"));
      }
    }
    report.workers.push_back(use);
  }

  // Row shards for the partitioned gradient round; the regularizer is added
  // at the master.
  std::vector<ProblemModel> shards;
  if (cluster.partitioned) {
    const Index n = p.n();
    for (std::int64_t k = 0; k < q; ++k) {
      const Index r0 = n * k / q;
      const Index r1 = n * (k + 1) / q;
      ProblemModel shard;
      shard.kind = p.kind;
      shard.A = p.A.middleRows(r0, r1 - r0);
      shard.target = p.kind == ProblemKind::barrier ? p.target : Vector(p.target.segment(r0, r1 - r0));
      shard.bound = p.bound;
      shards.push_back(std::move(shard));
    }
  }
  auto full_gradient = [&](const Vector& x, std::int64_t& comm) -> Vector {
    if (!cluster.partitioned) return gradient(p, x);
    const auto parts = run_cluster_round(cluster, [&](std::size_t k, const WorkerConfig&) -> Vector {
      if (shards[k].n() == 0) return Vector::Zero(d);
      return gradient(shards[k], x);
    });
    Vector g = Vector::Zero(d);
    for (const auto& part : parts) g += part;
    if (p.kind == ProblemKind::barrier) {
      g += 2.0 * p.lambda1 * (x - p.target);
    } else if (p.kind != ProblemKind::lstsq) {
      g += p.lambda1 * x;
    }
    comm += q * d;
    return g;
  };

  struct Local {
    Vector dir;
    SolveDiagnostics diag;
  };

  Vector x = Vector::Zero(d);
  std::int64_t comm = 0;
  double alpha1_scale = 1.0;
  report.trace.push_back(measure(p, ref, x, 0, comm, 0.0));
  for (int t = 1; t <= options.max_iters; ++t) {
    const auto start = Clock::now();
    const Vector g = full_gradient(x, comm);
    const HessianFactor h = hessian_factor(p, x);
    if (regularized) {
      report.sigma = sigma_heuristic(h, sigma_mode);
      for (auto& use : report.workers) {
        use.lambda2 = options.bias_corrected
                          ? lambda2_star_newton(h.regularization(), d, use.m, report.sigma)
                          : h.regularization();
      }
    }
    const auto locals = run_cluster_round(cluster, [&](std::size_t k, const WorkerConfig& w) {
      RngStream rng = w.stream.child(static_cast<std::uint64_t>(t));
      const Matrix sh = apply_sketch(w.sketch, h.half, rng);
      Matrix gram = Matrix::Zero(d, d);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(sh.transpose());
      gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
      gram.diagonal().array() += report.workers[k].lambda2;
      Local out;
      out.dir = -report.workers[k].alpha * solve_symmetric(gram, g, &out.diag);
      return out;
    });
    comm += q * d;
    Vector avg = Vector::Zero(d);
    for (std::size_t k = 0; k < locals.size(); ++k) {
      if (locals[k].diag.indefinite) {
        add_warning(report, "iteration " + std::to_string(t) + ", worker " + std::to_string(k) + ": " +
                                locals[k].diag.warning);
      }
      avg += locals[k].dir;
    }
    avg /= static_cast<double>(q);

    const double slope = g.dot(avg);
    if (!(slope < 0.0)) {
      ++report.rejected_steps;
      alpha1_scale *= 0.5;
      add_warning(report, "iteration " + std::to_string(t) +
                              ": averaged direction is not a descent direction; step rejected");
      report.trace.push_back(measure(p, ref, x, t, comm, seconds_since<Clock>(start)));
      continue;
    }
    if (-slope / 2.0 <= options.eps) {
      report.converged = true;
      break;
    }

    double a = options.alpha1.value_or(1.0) * alpha1_scale;
    if (line_search) {
      a = backtrack(p, x, objective(p, x), avg, slope, a);
    } else if (p.kind == ProblemKind::barrier) {
      a = shrink_to_domain(p, x, avg, a);
    }
    if (a == 0.0) {
      ++report.rejected_steps;
      add_warning(report, "iteration " + std::to_string(t) + ": no acceptable step length");
    }
    x += a * avg;
    report.trace.push_back(measure(p, ref, x, t, comm, seconds_since<Clock>(start)));
  }
  report.x = x;
  return report;
}

std::vector<DirectionStats> single_sketch_direction_stats(const Matrix& h_half, const Vector& g,
                                                          const SketchSpec& sketch, int trials,
                                                          std::span<const double> alphas,
                                                          double lambda1, double lambda2,
                                                          RngStream& rng) {
  const Index d = h_half.cols();
  if (g.size() != d) throw ShapeError("direction stats: gradient length must equal cols of H^{1/2}");
  if (trials < 2) throw Error("direction stats: need at least 2 trials");
  Matrix hess = h_half.transpose() * h_half;
  hess.diagonal().array() += lambda1;
  Eigen::LLT<Eigen::MatrixXd> llt(hess);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite(0);
  const Matrix r = llt.matrixU();
  const Vector exact = -llt.solve(g);

  Matrix factor = h_half;
  if (sketch.kind == SketchKind::gaussian && h_half.rows() > d) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(h_half);
    factor = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  }

  const std::size_t na = alphas.size();
  std::vector<Vector> sum(na, Vector::Zero(d));
  std::vector<double> sum_sq(na, 0.0), sum_quad(na, 0.0);
  Matrix gram(d, d);
  for (int i = 0; i < trials; ++i) {
    const Matrix sh = apply_sketch(sketch, factor, rng);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(sh.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    gram.diagonal().array() += lambda2;
    const Vector base = -solve_symmetric(gram, g);
    const Vector rb = r * base;
    const Vector re = r * exact;
    for (std::size_t j = 0; j < na; ++j) {
      const Vector e = alphas[j] * rb - re;
      const double e2 = e.squaredNorm();
      sum[j] += e;
      sum_sq[j] += e2;
      sum_quad[j] += e2 * e2;
    }
  }

  const double nt = static_cast<double>(trials);
  std::vector<DirectionStats> out;
  for (std::size_t j = 0; j < na; ++j) {
    DirectionStats s;
    s.alpha = alphas[j];
    const Vector mean = sum[j] / nt;
    s.bias_norm = mean.norm();
    const double trace_cov = std::max(0.0, (sum_sq[j] / nt - mean.squaredNorm()) * nt / (nt - 1.0));
    s.bias_se = std::sqrt(trace_cov / nt);
    s.variance = sum_sq[j] / nt;
    const double var_of_sq = std::max(0.0, (sum_quad[j] / nt - s.variance * s.variance) * nt / (nt - 1.0));
    s.variance_se = std::sqrt(var_of_sq / nt);
    out.push_back(s);
  }
  return out;
}

}  // namespace sketchavg
