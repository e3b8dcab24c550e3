#include <doctest.h>

#include "sketchavg/config.hpp"
#include "sketchavg/estimators.hpp"

using namespace sketchavg;

namespace {

const char* kFull = R"(# comment line
[problem]
kind = "ridge"   # trailing comment
n = 400
d = 40
lambda1 = 2.5
noise = 0.25
identical_sv = true
sigma = 1.5

[cluster]
q = [1, 4, 16]
m = 80
sketch = ["gaussian", "sjlt", "hybrid"]
s = 3
m2 = 200
inner = "sjlt"

[solver]
algorithm = "ridge-average"
correction = ["zero-bias", "vanilla", "printed"]

[output]
trials = 7
seed = 99
dir = "somewhere"
svg = true
threads = 2
)";

std::string message_of(const std::string& text) {
  try {
    validate(parse_config(text));
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse_config reads every section") {
  const ExperimentConfig c = parse_config(kFull);
  CHECK(c.problem.kind == ProblemKind::ridge);
  CHECK(c.problem.n == 400);
  CHECK(c.problem.lambda1 == 2.5);
  CHECK(c.problem.identical_sv);
  CHECK(c.cluster.q == std::vector<std::int64_t>{1, 4, 16});
  CHECK(c.cluster.sketches.size() == 3);
  CHECK(c.cluster.inner == SketchKind::sjlt);
  CHECK(c.solver.algorithm == Algorithm::ridge_average);
  CHECK(c.solver.corrections.back() == RidgeCorrection::printed);
  CHECK(c.output.trials == 7);
  CHECK(c.output.seed == 99);
  CHECK(c.output.dir == "somewhere");
  CHECK(c.output.threads == 2);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("format_config round-trips losslessly") {
  ExperimentConfig c = parse_config(kFull);
  CHECK(parse_config(format_config(c)) == c);

  c.problem.kind = ProblemKind::logistic;
  c.solver.algorithm = Algorithm::newton_sketch;
  c.solver.policies = {StepPolicy::unbiased, StepPolicy::min_variance};
  c.solver.alphas = {0.05, 0.1, 1.0 / 3.0};
  c.solver.lambda2 = {"corrected", "vanilla"};
  c.solver.sigma_mode = SigmaMode::mean_diag;
  c.solver.alpha1 = 0.7;
  c.solver.line_search = false;
  c.solver.mu = 0.123456789012345678;
  c.solver.eps = 1e-9;
  c.cluster.m_list = {50, 100};
  c.cluster.partitioned = true;
  CHECK(parse_config(format_config(c)) == c);
}

TEST_CASE("errors carry section, key and line") {
  CHECK(message_of("[problem]\nkind = \"lstsq\"\nn = abc\n").find("line 3") != std::string::npos);
  CHECK(message_of("[problem]\nkind = \"lstsq\"\nn = abc\n").find("[problem] n") != std::string::npos);
  CHECK(message_of("[problem]\nkindd = \"lstsq\"\n").find("line 2") != std::string::npos);
  CHECK(message_of("[problems]\nkind = \"lstsq\"\n").find("line 1") != std::string::npos);
  const std::string bad_sketch = message_of("[cluster]\n\nsketch = [\"gaussian\", \"fourier\"]\n");
  CHECK(bad_sketch.find("line 3") != std::string::npos);
  CHECK(bad_sketch.find("fourier") != std::string::npos);
  CHECK_THROWS_AS(parse_config("[solver]\nalgorithm = \"admm\"\n"), ConfigError);
}

TEST_CASE("validate catches cross-field problems") {
  CHECK_THROWS_AS(validate(parse_config("[problem]\nn = 10\nd = 20\n[cluster]\nm = 5\n")), ConfigError);
  CHECK_THROWS_AS(validate(parse_config("[problem]\nn = 100\nd = 5\n[cluster]\nm = 200\nsketch = [\"uniform\"]\n")),
                  Error);
  CHECK_THROWS_AS(validate(parse_config("[problem]\nn = 100\nd = 5\n[cluster]\nm = 0\n")), ConfigError);
}

TEST_CASE("infeasible corrections surface the estimator error verbatim") {
  const std::string text =
      "[problem]\nkind = \"ridge\"\nn = 1000\nd = 100\nlambda1 = 1\nidentical_sv = true\n"
      "[cluster]\nm = 20\n[solver]\nalgorithm = \"ridge-average\"\n";
  try {
    validate(parse_config(text));
    FAIL("expected Infeasible");
  } catch (const Infeasible& e) {
    std::string want;
    try {
      const std::vector<std::int64_t> m_list{20};
      per_worker_corrections(1.0, 100, m_list, 1.0, Regime::ridge);
    } catch (const Infeasible& ref) {
      want = ref.what();
    }
    CHECK(std::string(e.what()) == want);
  }
  const std::string moment = "[problem]\nn = 500\nd = 50\n[cluster]\nm = 51\n";
  CHECK_THROWS_AS(validate(parse_config(moment)), MomentUndefined);
}
