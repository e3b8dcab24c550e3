#include "sketchavg/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "sketchavg/error.hpp"
#include "sketchavg/linalg.hpp"
#include "sketchavg/matrix_io.hpp"

namespace sketchavg {
namespace {

constexpr std::array<std::pair<ProblemKind, std::string_view>, 4> kKinds{{
    {ProblemKind::lstsq, "lstsq"},
    {ProblemKind::ridge, "ridge"},
    {ProblemKind::logistic, "logistic"},
    {ProblemKind::barrier, "barrier"},
}};

constexpr std::array<std::pair<SigmaMode, std::string_view>, 3> kSigmaModes{{
    {SigmaMode::mean_sv, "mean-sv"},
    {SigmaMode::mean_diag, "mean-diag"},
    {SigmaMode::min_sv, "min-sv"},
}};

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& z) { return z.unaryExpr([](double v) { return sigmoid(v); }); }

void check_point(const ProblemModel& p, const Vector& x) {
  if (x.size() != p.d()) {
    throw ShapeError("point has length " + std::to_string(x.size()) + ", problem has d=" +
                     std::to_string(p.d()));
  }
}

/// Margins for barrier problems, throwing DomainViolation outside the domain.
Vector checked_margins(const ProblemModel& p, const Vector& x) {
  Vector r = barrier_margins(p, x);
  const double worst = r.minCoeff();
  if (!(worst > 0.0)) {
    throw DomainViolation("barrier domain violation: ||Ax||_inf >= bound (worst margin " +
                              std::to_string(worst) + ")",
                          worst);
  }
  return r;
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "unknown";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view name) {
  for (const auto& [k, n] : kKinds)
    if (n == name) return k;
  return std::nullopt;
}

std::string_view to_string(SigmaMode mode) {
  for (const auto& [k, name] : kSigmaModes)
    if (k == mode) return name;
  return "unknown";
}

std::optional<SigmaMode> parse_sigma_mode(std::string_view name) {
  for (const auto& [k, n] : kSigmaModes)
    if (n == name) return k;
  return std::nullopt;
}

SigmaMode default_sigma_mode(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::logistic:
      return SigmaMode::mean_diag;
    case ProblemKind::barrier:
      return SigmaMode::min_sv;
    default:
      return SigmaMode::mean_sv;
  }
}

void validate(const ProblemModel& p) {
  if (p.A.rows() < 1 || p.A.cols() < 1) throw ShapeError("problem: A must be non-empty");
  if (!p.A.allFinite()) throw Error("problem: A has non-finite entries");
  if (!(p.lambda1 >= 0.0)) throw Error("problem: lambda1 must be >= 0");
  const Index expect = p.kind == ProblemKind::barrier ? p.d() : p.n();
  if (p.target.size() != expect) {
    throw ShapeError(std::string("problem: ") + std::string(to_string(p.kind)) +
                     " target must have length " + std::to_string(expect) + ", got " +
                     std::to_string(p.target.size()));
  }
  if (p.kind == ProblemKind::logistic) {
    for (Index i = 0; i < p.target.size(); ++i) {
      if (p.target(i) != 0.0 && p.target(i) != 1.0) throw Error("problem: logistic labels must be 0 or 1");
    }
  }
  if (p.kind == ProblemKind::barrier && !(p.bound > 0.0)) throw Error("problem: barrier bound must be > 0");
  if (p.planted && p.planted->size() != p.d()) throw ShapeError("problem: planted vector has wrong length");
}

Vector barrier_margins(const ProblemModel& p, const Vector& x) {
  const Vector ax = p.A * x;
  Vector r(2 * p.n());
  r.head(p.n()) = (p.bound - ax.array()).matrix();
  r.tail(p.n()) = (p.bound + ax.array()).matrix();
  return r;
}

double objective(const ProblemModel& p, const Vector& x) {
  check_point(p, x);
  switch (p.kind) {
    case ProblemKind::lstsq:
      return 0.5 * (p.A * x - p.target).squaredNorm();
    case ProblemKind::ridge:
      return 0.5 * (p.A * x - p.target).squaredNorm() + 0.5 * p.lambda1 * x.squaredNorm();
    case ProblemKind::logistic: {
      const Vector z = p.A * x;
      double loss = 0.0;
      for (Index i = 0; i < z.size(); ++i) loss += softplus(z(i)) - p.target(i) * z(i);
      return loss + 0.5 * p.lambda1 * x.squaredNorm();
    }
    case ProblemKind::barrier: {
      const Vector r = checked_margins(p, x);
      return -r.array().log().sum() + p.lambda1 * x.squaredNorm() -
             2.0 * p.lambda1 * p.target.dot(x) + p.lambda1 * p.target.squaredNorm();
    }
  }
  throw Error("unknown problem kind");
}

Vector gradient(const ProblemModel& p, const Vector& x) {
  check_point(p, x);
  switch (p.kind) {
    case ProblemKind::lstsq:
      return p.A.transpose() * (p.A * x - p.target);
    case ProblemKind::ridge:
      return p.A.transpose() * (p.A * x - p.target) + p.lambda1 * x;
    case ProblemKind::logistic:
      return p.A.transpose() * (sigmoid(p.A * x) - p.target) + p.lambda1 * x;
    case ProblemKind::barrier: {
      const Vector r = checked_margins(p, x);
      const Index n = p.n();
      const Vector w = (r.head(n).array().inverse() - r.tail(n).array().inverse()).matrix();
      return p.A.transpose() * w + 2.0 * p.lambda1 * (x - p.target);
    }
  }
  throw Error("unknown problem kind");
}

HessianFactor hessian_factor(const ProblemModel& p, const Vector& x) {
  check_point(p, x);
  HessianFactor h;
  h.lambda1 = p.lambda1;
  switch (p.kind) {
    case ProblemKind::lstsq:
    case ProblemKind::ridge:
      h.half = p.A;
      h.reg_mult = p.kind == ProblemKind::lstsq ? 0.0 : 1.0;
      h.row_scale = Vector::Ones(p.n());
      return h;
    case ProblemKind::logistic: {
      const Vector prob = sigmoid(p.A * x);
      h.row_scale = (prob.array() * (1.0 - prob.array())).sqrt().matrix();
      h.half = h.row_scale.asDiagonal() * p.A;
      h.reg_mult = 1.0;
      return h;
    }
    case ProblemKind::barrier: {
      // D = diag(1 / (A_c x - bound)) with A_c = [A; -A], half = D A_c.
      const Vector r = checked_margins(p, x);
      const Index n = p.n();
      const Vector dvals = (-r.array().inverse()).matrix();
      h.half.resize(2 * n, p.d());
      h.half.topRows(n) = dvals.head(n).asDiagonal() * p.A;
      h.half.bottomRows(n) = -(dvals.tail(n).asDiagonal() * p.A);
      h.row_scale = dvals.cwiseAbs();
      h.reg_mult = 2.0;
      return h;
    }
  }
  throw Error("unknown problem kind");
}

Matrix hessian(const ProblemModel& p, const Vector& x) {
  const HessianFactor h = hessian_factor(p, x);
  Matrix out = h.half.transpose() * h.half;
  out.diagonal().array() += h.regularization();
  return out;
}

double sigma_heuristic(const HessianFactor& h, SigmaMode mode) {
  double sigma = 0.0;
  switch (mode) {
    case SigmaMode::mean_sv:
      sigma = singular_values(h.half).mean();
      break;
    case SigmaMode::min_sv:
      sigma = singular_values(h.half).minCoeff();
      break;
    case SigmaMode::mean_diag:
      sigma = h.row_scale.mean();
      break;
  }
  if (!(sigma > 0.0)) throw Error("sigma heuristic produced a non-positive value", false);
  return sigma;
}

double sigma_heuristic(const ProblemModel& p, const Vector& x, SigmaMode mode) {
  return sigma_heuristic(hessian_factor(p, x), mode);
}

ProblemModel generate_problem(ProblemKind kind, Index n, Index d, double noise, RngStream& rng,
                              const GenerateOptions& options) {
  if (d < 1 || n < d) {
    throw ShapeError("generate_problem: need n >= d >= 1, got n=" + std::to_string(n) +
                     " d=" + std::to_string(d));
  }
  if (!(noise >= 0.0)) throw Error("generate_problem: noise must be >= 0");
  ProblemModel p;
  p.kind = kind;
  p.lambda1 = options.lambda1;
  if (options.identical_sv) {
    p.A = make_identical_singular_matrix<double>(n, d, options.sigma, rng);
  } else {
    p.A.resize(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) p.A(i, j) = options.a_scale * rng.normal();
  }
  Vector x0(d);
  for (Index j = 0; j < d; ++j) x0(j) = rng.normal();
  x0.normalize();
  p.planted = x0;

  switch (kind) {
    case ProblemKind::lstsq:
    case ProblemKind::ridge: {
      p.target = p.A * x0;
      if (noise > 0.0) {
        for (Index i = 0; i < n; ++i) p.target(i) += noise * rng.normal();
      }
      break;
    }
    case ProblemKind::logistic: {
      const Vector prob = sigmoid(p.A * x0);
      p.target.resize(n);
      for (Index i = 0; i < n; ++i) p.target(i) = rng.bernoulli(prob(i)) ? 1.0 : 0.0;
      break;
    }
    case ProblemKind::barrier: {
      p.bound = options.bound;
      p.target.resize(d);
      for (Index j = 0; j < d; ++j) p.target(j) = options.c_scale * rng.normal();
      break;
    }
  }
  validate(p);
  return p;
}

void save_problem(const std::filesystem::path& dir, const ProblemModel& p,
                  const ProblemManifest& manifest) {
  validate(p);
  std::filesystem::create_directories(dir);
  write_samx(dir / "A.samx", p.A);
  write_samx(dir / "target.samx", Matrix(p.target));
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(p.kind));
  j["n"] = p.n();
  j["d"] = p.d();
  j["lambda1"] = p.lambda1;
  j["bound"] = p.bound;
  j["seed"] = manifest.seed;
  j["noise"] = manifest.noise;
  j["identical_sv"] = manifest.options.identical_sv;
  j["sigma"] = manifest.options.sigma;
  j["a_scale"] = manifest.options.a_scale;
  j["c_scale"] = manifest.options.c_scale;
  j["files"] = {{"A", "A.samx"}, {"target", "target.samx"}};
  if (p.planted) {
    write_samx(dir / "planted.samx", Matrix(*p.planted));
    j["files"]["planted"] = "planted.samx";
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write '" + (dir / "manifest.json").string() + "'", false);
  out << j.dump(2) << '\n';
}

ProblemModel load_problem(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("cannot read '" + (dir / "manifest.json").string() + "'", false);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest.json: " + std::string(e.what()));
  }
  ProblemModel p;
  const auto kind = parse_problem_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error("manifest.json: unknown kind");
  p.kind = *kind;
  p.lambda1 = j.value("lambda1", 0.0);
  p.bound = j.value("bound", 0.0);
  const auto& files = j.at("files");
  p.A = read_samx(dir / files.at("A").get<std::string>());
  const Matrix t = read_samx(dir / files.at("target").get<std::string>());
  p.target = Eigen::Map<const Vector>(t.data(), t.size());
  if (files.contains("planted")) {
    const Matrix x0 = read_samx(dir / files.at("planted").get<std::string>());
    p.planted = Vector(Eigen::Map<const Vector>(x0.data(), x0.size()));
  }
  validate(p);
  return p;
}

}  // namespace sketchavg
