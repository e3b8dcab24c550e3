#include "sketchavg/verification.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "sketchavg/estimators.hpp"
#include "sketchavg/experiment.hpp"
#include "sketchavg/linalg.hpp"
#include "sketchavg/problems.hpp"
#include "sketchavg/sketch.hpp"
#include "sketchavg/solvers.hpp"

namespace sketchavg {
namespace {

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out << std::setprecision(digits) << v;
  return out.str();
}

Check rel_check(std::string label, double observed, double predicted, double rel) {
  const double err = std::abs(observed - predicted) / std::abs(predicted);
  return {std::move(label), observed, predicted, "rel <= " + fmt(rel), err <= rel, err - rel};
}

Check abs_check(std::string label, double observed, double predicted, double tol) {
  const double err = std::abs(observed - predicted);
  return {std::move(label), observed, predicted, "abs <= " + fmt(tol), err <= tol, err - tol};
}

Check at_most(std::string label, double observed, double bound, std::string tolerance) {
  return {std::move(label), observed, bound, std::move(tolerance), observed <= bound, observed - bound};
}

Check below(std::string label, double observed, double bound, std::string tolerance) {
  return {std::move(label), observed, bound, std::move(tolerance), observed < bound, observed - bound};
}

Check at_least(std::string label, double observed, double bound, std::string tolerance) {
  return {std::move(label), observed, bound, std::move(tolerance), observed >= bound, bound - observed};
}

Check info(std::string label, double observed, double predicted) {
  return {std::move(label), observed, predicted, "reported only", true, 0.0};
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(seed ^ mix64(a * 0x9e3779b97f4a7c15ULL + b));
}

Matrix gram_of(const Matrix& sa) {
  Matrix g = Matrix::Zero(sa.cols(), sa.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(sa.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

/// R factor of a tall matrix: for Gaussian S, S * R has the law of S * M.
Matrix triangular_factor(const Matrix& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
}

// Inverse-Wishart moments of the Gaussian-sketched Gram of an orthonormal basis.
SuiteResult suite_moments(const VerifyOptions& o) {
  constexpr Index n = 400, d = 5, m = 60;
  constexpr int trials = 5000;
  RngStream rng(o.seed, 101);
  const Matrix u = random_orthonormal(n, d, rng);
  Matrix s1 = Matrix::Zero(d, d), s2 = Matrix::Zero(d, d);
  for (int i = 0; i < trials; ++i) {
    const Matrix g = gram_of(apply_gaussian(u, m, rng));
    const Matrix inv = g.llt().solve(Matrix::Identity(d, d));
    s1 += inv;
    s2 += inv * inv;
  }
  s1 /= trials;
  s2 /= trials;
  SuiteResult r{"moments", "inverse-Wishart moments theta1, theta2 (n=400, d=5, m=60, 5000 sketches)", {}, 0};
  const MomentPair th = moments(m, d);
  for (int which = 0; which < 2; ++which) {
    const Matrix& mean = which == 0 ? s1 : s2;
    const double target = which == 0 ? th.theta1 : th.theta2;
    const std::string name = which == 0 ? "E[G^-1]" : "E[G^-2]";
    Index worst = 0;
    for (Index i = 0; i < d; ++i) {
      if (std::abs(mean(i, i) - target) > std::abs(mean(worst, worst) - target)) worst = i;
    }
    r.checks.push_back(rel_check(name + " worst diagonal", mean(worst, worst), target, 0.05));
    Matrix off = mean;
    off.diagonal().setZero();
    r.checks.push_back(abs_check(name + " worst off-diagonal", off.cwiseAbs().maxCoeff(), 0.0, 0.05));
  }
  return r;
}

SuiteResult suite_theta3(const VerifyOptions& o) {
  constexpr Index n = 4000, d = 20, m = 40;
  constexpr int trials = 2000;
  const std::array<double, 3> lambdas{0.1, 1.0, 10.0};
  RngStream rng(o.seed, 102);
  const Matrix u = random_orthonormal(n, d, rng);
  std::array<Matrix, 3> sums;
  for (auto& s : sums) s = Matrix::Zero(d, d);
  for (int i = 0; i < trials; ++i) {
    const Matrix g = gram_of(apply_gaussian(u, m, rng));
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      Matrix reg = g;
      reg.diagonal().array() += lambdas[l];
      sums[l] += reg.llt().solve(Matrix::Identity(d, d));
    }
  }
  SuiteResult r{"theta3", "limit theta3 of E[(G + lambda I)^-1] (n=4000, d=20, m=40, 2000 sketches)", {}, 0};
  const double gamma = static_cast<double>(d) / m;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    const Vector diag = sums[l].diagonal() / trials;
    const double target = theta3(gamma, lambdas[l]);
    Index worst = 0;
    for (Index i = 0; i < d; ++i) {
      if (std::abs(diag(i) - target) > std::abs(diag(worst) - target)) worst = i;
    }
    r.checks.push_back(rel_check("lambda=" + fmt(lambdas[l]) + " worst diagonal", diag(worst), target, 0.05));
  }
  return r;
}

struct IhsRun {
  ProblemModel problem;
  Reference ref;
};

IhsRun ihs_problem(const VerifyOptions& o) {
  RngStream rng(o.seed, 103);
  IhsRun run{generate_problem(ProblemKind::lstsq, 1000, 50, 0.1, rng), {}};
  run.ref = make_reference(run.problem);
  return run;
}

/// Trace of errA_sq(t) / errA_sq(0) for every trial.
std::vector<std::vector<double>> ihs_curves(const IhsRun& run, std::uint64_t seed, std::size_t q, int trials,
                                            int iterations, double eps) {
  std::vector<std::vector<double>> out;
  for (int trial = 0; trial < trials; ++trial) {
    const ClusterConfig cluster = make_cluster(derive(seed, q, trial), q, SketchSpec{SketchKind::gaussian, 150});
    const SolverReport rep = dist_ihs(run.problem, cluster, {iterations, std::nullopt, eps}, &run.ref);
    std::vector<double> curve;
    for (const auto& rec : rep.trace) curve.push_back(rec.errA_sq / rep.trace.front().errA_sq);
    out.push_back(std::move(curve));
  }
  return out;
}

SuiteResult suite_thm1(const VerifyOptions& o) {
  const IhsRun run = ihs_problem(o);
  SuiteResult r{"thm1", "one-step contraction of averaged IHS (n=1000, d=50, m=150, 200 trials)", {}, 0};
  std::map<std::size_t, double> observed;
  for (const std::size_t q : {1u, 4u, 8u}) {
    const auto curves = ihs_curves(run, o.seed, q, 200, 1, 0.0);
    double mean = 0.0;
    for (const auto& c : curves) mean += c[1];
    mean /= static_cast<double>(curves.size());
    observed[q] = mean;
    r.checks.push_back(rel_check("q=" + std::to_string(q) + " E||e1||^2/||e0||^2", mean,
                                 ihs_rate(static_cast<std::int64_t>(q), 150, 50), 0.10));
  }
  r.checks.push_back(info("q=1 contraction / q=8 contraction", observed[1] / observed[8], 8.0));
  return r;
}

SuiteResult suite_cor1(const VerifyOptions& o) {
  constexpr double eps = 1e-6;
  const IhsRun run = ihs_problem(o);
  SuiteResult r{"cor1", "iterations to reach eps=1e-6 (n=1000, d=50, m=150, 200 trials)", {}, 0};
  for (const std::size_t q : {1u, 4u, 8u}) {
    const double predicted = std::ceil(predict_iterations(eps, static_cast<std::int64_t>(q), 150, 50));
    const int horizon = static_cast<int>(predicted) + 4;
    const auto curves = ihs_curves(run, o.seed + 1, q, 200, horizon, eps);
    // First t at which the Monte Carlo mean of the relative error reaches eps.
    double crossing = horizon + 1;
    for (int t = 0; t <= horizon; ++t) {
      double mean = 0.0;
      for (const auto& c : curves) mean += c[static_cast<std::size_t>(t)];
      if (mean / static_cast<double>(curves.size()) <= eps) {
        crossing = t;
        break;
      }
    }
    double first_passage = 0.0;
    for (const auto& c : curves) {
      std::size_t t = 0;
      while (t + 1 < c.size() && c[t] > eps) ++t;
      first_passage += static_cast<double>(t);
    }
    first_passage /= static_cast<double>(curves.size());
    r.checks.push_back(abs_check("q=" + std::to_string(q) + " iterations (mean error <= eps)", crossing, predicted, 1.0));
    r.checks.push_back(info("q=" + std::to_string(q) + " mean per-trial first passage", first_passage, predicted));
  }
  return r;
}

SuiteResult suite_thm2(const VerifyOptions& o) {
  constexpr int trials = 10;
  constexpr std::size_t q = 400;
  RngStream rng(o.seed, 104);
  GenerateOptions gen;
  gen.lambda1 = 5.0;
  gen.identical_sv = true;
  gen.sigma = 1.0;
  const ProblemModel p = generate_problem(ProblemKind::ridge, 1000, 100, 0.0, rng, gen);
  const Reference ref = make_reference(p);
  std::map<RidgeCorrection, std::array<double, 2>> err;
  for (const auto mode : {RidgeCorrection::zero_bias, RidgeCorrection::vanilla}) {
    std::array<double, 2> acc{0.0, 0.0};
    for (int trial = 0; trial < trials; ++trial) {
      const ClusterConfig cluster = make_cluster(derive(o.seed, 104, trial), q, SketchSpec{SketchKind::gaussian, 20});
      RidgeOptions opt;
      opt.correction = mode;
      const SolverReport rep = dist_ridge_average(p, cluster, opt, &ref);
      acc[0] += rep.partial[99].rel_x_err;
      acc[1] += rep.partial[399].rel_x_err;
    }
    err[mode] = {acc[0] / trials, acc[1] / trials};
  }
  const auto& zb = err[RidgeCorrection::zero_bias];
  const auto& van = err[RidgeCorrection::vanilla];
  SuiteResult r{"thm2", "bias-corrected ridge averaging (n=1000, d=100, lambda1=5, m=20, sigma=1)", {}, 0};
  r.checks.push_back(info("zero-bias error at q=100", zb[0], std::nan("")));
  r.checks.push_back(info("vanilla error at q=100", van[0], std::nan("")));
  r.checks.push_back(at_most("zero-bias / vanilla error at q=100", zb[0] / van[0], 0.2, "<= 0.2"));
  r.checks.push_back(below("vanilla shrink q=100 -> 400", van[0] / van[1], 1.25, "< 1.25"));
  r.checks.push_back(at_least("zero-bias shrink q=100 -> 400", zb[0] / zb[1], 1.5, ">= 1.5"));
  return r;
}

SuiteResult suite_lambda(const VerifyOptions& o) {
  RngStream rng(o.seed, 105);
  double worst_ridge = 0.0, worst_newton = 0.0;
  int accepted = 0;
  while (accepted < 1000) {
    const double lambda1 = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    const auto d = static_cast<std::int64_t>(1 + rng.index(200));
    const auto m = static_cast<std::int64_t>(1 + rng.index(400));
    const double sigma = std::pow(10.0, -1.0 + 2.0 * rng.uniform());
    if (!ridge_correction_feasible(lambda1, d, m, sigma)) continue;
    const double l2 = lambda2_star_ridge(lambda1, d, m, sigma);
    if (!(l2 > 0.0)) continue;
    ++accepted;
    const double gamma = static_cast<double>(d) / static_cast<double>(m);
    const double res = zero_bias_residual_ridge(lambda1, l2, gamma, sigma) / std::max(1.0, lambda1);
    worst_ridge = std::max(worst_ridge, std::abs(res));
    const double ln = lambda2_star_newton(lambda1, d, m, sigma);
    const double gap = theta3(gamma, ln / (sigma * sigma)) - 1.0 / (1.0 + lambda1 / (sigma * sigma));
    worst_newton = std::max(worst_newton, std::abs(gap));
  }
  SuiteResult r{"lambda", "closed-form zero-bias regularization (1000 random feasible parameter sets)", {}, 0};
  r.checks.push_back(at_most("ridge bias condition residual (worst)", worst_ridge, 1e-10, "<= 1e-10"));
  r.checks.push_back(at_most("newton theta3 condition residual (worst)", worst_newton, 1e-10, "<= 1e-10"));
  r.checks.push_back(abs_check("lambda2*(lambda1=5, d/m=5, sigma=1)", lambda2_star_ridge(5.0, 100, 20, 1.0),
                               5.0 / 6.0, 1e-12));
  return r;
}

/// Mean cost_gap per iteration over `trials` runs of the Newton sketch.
std::vector<double> newton_curve(const ProblemModel& p, const Reference& ref, const SketchSpec& spec,
                                 std::size_t q, const NewtonOptions& opt, int trials, std::uint64_t seed) {
  std::vector<double> mean;
  for (int trial = 0; trial < trials; ++trial) {
    const ClusterConfig cluster = make_cluster(derive(seed, q, trial), q, spec);
    const SolverReport rep = dist_newton_sketch(p, cluster, opt, &ref);
    if (mean.empty()) mean.assign(static_cast<std::size_t>(opt.max_iters) + 1, 0.0);
    for (std::size_t t = 0; t < mean.size(); ++t) {
      mean[t] += rep.trace[std::min(t, rep.trace.size() - 1)].cost_gap / trials;
    }
  }
  return mean;
}

SuiteResult suite_thm3(const VerifyOptions& o) {
  constexpr Index d = 200, m = 400;
  constexpr int trials = 5000;
  RngStream rng(o.seed, 106);
  Matrix h(600, d);
  for (Index i = 0; i < h.rows(); ++i)
    for (Index j = 0; j < d; ++j) h(i, j) = rng.normal();
  Vector g(d);
  for (Index j = 0; j < d; ++j) g(j) = rng.normal();
  const StepScaling sc = step_scalings(m, d);
  const std::vector<double> grid{0.8, 0.9, 1.0, 1.1, 1.2};
  std::vector<double> alphas{sc.alpha_unbiased};
  for (double f : grid) alphas.push_back(f * sc.alpha_minvar);
  const auto stats = single_sketch_direction_stats(h, g, {SketchKind::gaussian, m}, trials, alphas, 0.0, 0.0, rng);

  SuiteResult r{"thm3", "Newton sketch step scalings (d=200, m=400, 5000 sketches) and worker-count ordering", {}, 0};
  r.checks.push_back(at_most("bias norm at 1/theta1 (in standard errors)", stats[0].bias_norm / stats[0].bias_se, 3.0,
                             "<= 3 SE"));
  const double best = stats[3].variance;
  for (std::size_t j = 1; j < stats.size(); ++j) {
    if (j == 3) continue;
    r.checks.push_back(at_most("variance at theta1/theta2 vs " + fmt(grid[j - 1]) + "x", best, stats[j].variance,
                               "<= variance at grid point"));
  }

  RngStream prng(o.seed, 107);
  const ProblemModel p = generate_problem(ProblemKind::lstsq, 1000, d, 1.0, prng);
  const Reference ref = make_reference(p);
  for (const std::size_t q : {10u, 2u}) {
    NewtonOptions unb, mv;
    unb.max_iters = mv.max_iters = 10;
    unb.policy = StepPolicy::unbiased;
    mv.policy = StepPolicy::min_variance;
    const auto a = newton_curve(p, ref, {SketchKind::gaussian, m}, q, unb, 3, derive(o.seed, 107));
    const auto b = newton_curve(p, ref, {SketchKind::gaussian, m}, q, mv, 3, derive(o.seed, 107));
    const double ratio = a.back() / b.back();
    if (q == 10) {
      r.checks.push_back(below("q=10 cost gap at t=10, unbiased / min-variance", ratio, 1.0, "< 1"));
    } else {
      r.checks.push_back(at_least("q=2 cost gap at t=10, unbiased / min-variance", ratio, 1.0, "> 1"));
    }
  }
  return r;
}

SuiteResult suite_thm4(const VerifyOptions& o) {
  RngStream rng(o.seed, 108);
  GenerateOptions gen;
  gen.lambda1 = 1000.0;
  gen.identical_sv = true;
  gen.sigma = 10.0;
  gen.bound = 0.01;
  gen.c_scale = 0.01;
  const ProblemModel p = generate_problem(ProblemKind::barrier, 500, 200, 0.0, rng, gen);
  const Reference ref = make_reference(p);
  SuiteResult r{"thm4", "bias-corrected Newton sketch on the log-barrier problem (n=500, d=200, lambda1=1000, m=50, q=10)", {}, 0};
  for (const SketchKind kind : {SketchKind::gaussian, SketchKind::sjlt}) {
    const SketchSpec spec{kind, 50, 10};
    NewtonOptions corrected, vanilla;
    corrected.max_iters = vanilla.max_iters = 10;
    vanilla.bias_corrected = false;
    const auto a = newton_curve(p, ref, spec, 10, corrected, 3, derive(o.seed, 108));
    const auto b = newton_curve(p, ref, spec, 10, vanilla, 3, derive(o.seed, 108));
    double worst = 0.0;
    for (std::size_t t = 5; t < a.size(); ++t) worst = std::max(worst, a[t] / b[t]);
    r.checks.push_back(info(std::string(to_string(kind)) + " corrected cost gap at t=10", a.back(), b.back()));
    r.checks.push_back(at_most(std::string(to_string(kind)) + " worst corrected/vanilla ratio, t>=5", worst, 1.0,
                               "<= 1"));
  }
  return r;
}

SuiteResult suite_hetero(const VerifyOptions& o) {
  constexpr Index n = 1000, d = 50;
  constexpr int trials = 3000;
  constexpr double lambda1 = 1.0;
  RngStream rng(o.seed, 109);
  GenerateOptions gen;
  gen.lambda1 = lambda1;
  gen.identical_sv = true;
  const ProblemModel p = generate_problem(ProblemKind::ridge, n, d, 0.5, rng, gen);
  const Vector x_star = solve_direct(p);
  Matrix ab(n, d + 1);
  ab.leftCols(d) = p.A;
  ab.col(d) = p.target;
  const Matrix factor = triangular_factor(ab);

  SuiteResult r{"hetero", "per-worker zero-bias ridge with m_list = [2d, 4d, 8d] (3000 sketches each)", {}, 0};
  const std::vector<std::int64_t> sizes{2 * d, 4 * d, 8 * d};
  const auto corrections = per_worker_corrections(lambda1, d, sizes, 1.0, Regime::ridge);
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double l2 = corrections[k].correction.lambda2_star;
    RngStream wrng = rng.child(k);
    Vector sum = Vector::Zero(d);
    double sum_sq = 0.0;
    for (int i = 0; i < trials; ++i) {
      const Matrix sab = apply_gaussian(factor, sizes[k], wrng);
      Matrix gram = gram_of(sab.leftCols(d));
      gram.diagonal().array() += l2;
      const Vector e = gram.llt().solve(sab.leftCols(d).transpose() * sab.col(d)) - x_star;
      sum += e;
      sum_sq += e.squaredNorm();
    }
    const Vector mean = sum / trials;
    const double trace_cov = (sum_sq / trials - mean.squaredNorm()) * trials / (trials - 1.0);
    const double se = std::sqrt(trace_cov / trials);
    r.checks.push_back(at_most("worker " + std::to_string(k) + " (m=" + std::to_string(sizes[k]) +
                                   ", lambda2=" + fmt(l2) + ") bias in standard errors",
                               mean.norm() / se, 3.0, "<= 3 SE"));
  }
  return r;
}

double sketch_moment_error(const SketchSpec& spec, Index n, int trials, RngStream& rng) {
  Matrix acc = Matrix::Zero(n, n);
  for (int i = 0; i < trials; ++i) {
    const Matrix s = materialize_sketch(spec, n, rng);
    acc += s.transpose() * s;
  }
  return (acc / trials - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

SuiteResult suite_sketches(const VerifyOptions& o) {
  constexpr Index n = 16;
  SuiteResult r{"sketches", "E[S^T S] = I for every sketch kind (n=16, m=12) and SJLT streaming exactness", {}, 0};
  for (const SketchKind kind : {SketchKind::gaussian, SketchKind::hadamard, SketchKind::uniform, SketchKind::sjlt,
                                SketchKind::hybrid}) {
    const SketchSpec spec{kind, 12, 3, 14, SketchKind::gaussian};
    RngStream small(o.seed, 200 + static_cast<std::uint64_t>(kind));
    RngStream large(o.seed, 300 + static_cast<std::uint64_t>(kind));
    const double e250 = sketch_moment_error(spec, n, 250, small);
    const double e2000 = sketch_moment_error(spec, n, 2000, large);
    r.checks.push_back(below(std::string(to_string(kind)) + " max |mean S^T S - I| at 2000", e2000, 0.08, "< 0.08"));
    r.checks.push_back(below(std::string(to_string(kind)) + " error at 2000 vs 250 trials", e2000, e250,
                             "< error at 250"));
  }
  double worst = 0.0;
  RngStream rng(o.seed, 110);
  for (const Index rows : {1, 7, 16, 33, 50}) {
    Matrix a(rows, 4);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < 4; ++j) a(i, j) = rng.normal();
    RngStream s1 = rng.child(static_cast<std::uint64_t>(rows));
    RngStream s2 = s1;
    const Matrix streamed = apply_sjlt(a, 8, 3, s1);
    const Matrix dense = materialize_sjlt(rows, 8, 3, s2);
    Matrix product = Matrix::Zero(8, 4);
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 4; ++j)
        for (Index k = 0; k < rows; ++k) product(i, j) += dense(i, k) * a(k, j);
    worst = std::max(worst, (streamed - product).cwiseAbs().maxCoeff());
  }
  r.checks.push_back(at_most("SJLT streaming vs dense product, n <= 50 (max abs diff)", worst, 0.0, "== 0"));
  return r;
}

SuiteResult suite_derivs(const VerifyOptions& o) {
  SuiteResult r{"derivs", "gradient and Hessian finite differences (20 points per problem kind)", {}, 0};
  RngStream rng(o.seed, 111);
  for (const ProblemKind kind : {ProblemKind::lstsq, ProblemKind::ridge, ProblemKind::logistic, ProblemKind::barrier}) {
    GenerateOptions gen;
    gen.lambda1 = kind == ProblemKind::lstsq ? 0.0 : 0.7;
    const ProblemModel p = generate_problem(kind, 30, 5, 0.3, rng, gen);
    double worst_g = 0.0, worst_h = 0.0;
    for (int pt = 0; pt < 20; ++pt) {
      Vector x(p.d());
      for (Index j = 0; j < p.d(); ++j) x(j) = 0.5 * rng.normal();
      if (kind == ProblemKind::barrier) {
        const double peak = (p.A * x).cwiseAbs().maxCoeff();
        x *= 0.5 * p.bound / std::max(peak, 1e-12);
      }
      const Vector g = gradient(p, x);
      const Matrix h = hessian(p, x);
      Vector gfd(p.d());
      Matrix hfd(p.d(), p.d());
      for (Index j = 0; j < p.d(); ++j) {
        const double step = 1e-6 * std::max(1.0, std::abs(x(j)));
        Vector xp = x, xm = x;
        xp(j) += step;
        xm(j) -= step;
        gfd(j) = (objective(p, xp) - objective(p, xm)) / (2 * step);
        hfd.col(j) = (gradient(p, xp) - gradient(p, xm)) / (2 * step);
      }
      worst_g = std::max(worst_g, (gfd - g).norm() / std::max(g.norm(), 1e-8));
      worst_h = std::max(worst_h, (hfd - h).norm() / std::max(h.norm(), 1e-8));
    }
    r.checks.push_back(at_most(std::string(to_string(kind)) + " gradient relative error", worst_g, 1e-4, "<= 1e-4"));
    r.checks.push_back(at_most(std::string(to_string(kind)) + " Hessian relative error", worst_h, 1e-4, "<= 1e-4"));
  }
  return r;
}

std::string aggregate_bytes(const ExperimentConfig& c, unsigned threads) {
  const ExperimentResult res = run_experiment(c, threads);
  std::ostringstream out;
  write_aggregate_csv(out, res.aggregate);
  return out.str();
}

double differing_bytes(const std::string& a, const std::string& b) {
  std::size_t diff = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) diff += a[i] != b[i];
  return static_cast<double>(diff);
}

SuiteResult suite_determinism(const VerifyOptions& o) {
  SuiteResult r{"determinism", "identical config and seed give identical aggregate CSV bytes, serial and parallel", {}, 0};
  ExperimentConfig ihs;
  ihs.problem = {ProblemKind::lstsq, 300, 10, 0.0, 0.1};
  ihs.cluster.q = {1, 4};
  ihs.cluster.m = 40;
  ihs.cluster.sketches = {SketchKind::gaussian, SketchKind::sjlt, SketchKind::hadamard};
  ihs.cluster.s = 2;
  ihs.solver.iterations = 6;
  ihs.output.trials = 4;
  ihs.output.seed = o.seed;

  ExperimentConfig newton;
  newton.problem = {ProblemKind::logistic, 300, 8, 0.5, 0.0};
  newton.cluster.q = {3};
  newton.cluster.m = 40;
  newton.cluster.partitioned = true;
  newton.solver.algorithm = Algorithm::newton_sketch;
  newton.solver.lambda2 = {"corrected", "vanilla"};
  newton.solver.iterations = 5;
  newton.output.trials = 3;
  newton.output.seed = o.seed + 1;

  for (const auto* c : {&ihs, &newton}) {
    const std::string name = std::string(to_string(c->solver.algorithm));
    const std::string serial = aggregate_bytes(*c, 1);
    const std::string again = aggregate_bytes(*c, 1);
    const std::string parallel = aggregate_bytes(*c, std::max(4u, o.threads));
    r.checks.push_back(at_most(name + ": repeated serial runs, differing bytes", differing_bytes(serial, again), 0.0,
                               "== 0"));
    r.checks.push_back(at_most(name + ": serial vs parallel, differing bytes", differing_bytes(serial, parallel), 0.0,
                               "== 0"));
  }
  return r;
}

using SuiteFn = SuiteResult (*)(const VerifyOptions&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites{
      {"moments", suite_moments}, {"theta3", suite_theta3},   {"thm1", suite_thm1},
      {"cor1", suite_cor1},       {"thm2", suite_thm2},       {"lambda", suite_lambda},
      {"thm3", suite_thm3},       {"thm4", suite_thm4},       {"hetero", suite_hetero},
      {"sketches", suite_sketches}, {"derivs", suite_derivs}, {"determinism", suite_determinism},
  };
  return suites;
}

}  // namespace

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

SuiteResult run_suite(std::string_view name, const VerifyOptions& options) {
  for (const auto& [n, fn] : registry()) {
    if (n != name) continue;
    const auto start = std::chrono::steady_clock::now();
    SuiteResult r = fn(options);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }
  std::string known;
  for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error("unknown verify suite '" + std::string(name) + "' (expected one of " + known + ")");
}

void print_suite(std::ostream& out, const SuiteResult& r) {
  out << r.name << ": " << r.title << '\n';
  out << "  " << std::left << std::setw(58) << "check" << std::setw(15) << "observed" << std::setw(15)
      << "predicted" << "tolerance\n";
  for (const auto& c : r.checks) {
    out << "  " << std::left << std::setw(58) << c.label << std::setw(15) << fmt(c.observed, 6) << std::setw(15)
        << fmt(c.predicted, 6) << c.tolerance;
    if (!c.pass) out << "  MISSED by " << fmt(c.miss, 3);
    out << '\n';
  }
  out << (r.pass() ? "PASS " : "FAIL ") << r.name << " (" << fmt(r.seconds, 3) << " s)\n";
}

}  // namespace sketchavg
