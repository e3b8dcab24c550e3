#include <doctest.h>

#include <chrono>
#include <sstream>

#include "oracles.hpp"
#include "sketchavg/estimators.hpp"
#include "sketchavg/experiment.hpp"
#include "sketchavg/report_io.hpp"
#include "sketchavg/svg.hpp"

using namespace sketchavg;

namespace {

ExperimentConfig small_ihs() {
  ExperimentConfig c;
  c.problem.kind = ProblemKind::lstsq;
  c.problem.n = 300;
  c.problem.d = 10;
  c.problem.noise = 0.5;
  c.cluster.q = {2, 4};
  c.cluster.m = 40;
  c.cluster.sketches = {SketchKind::gaussian, SketchKind::sjlt};
  c.cluster.s = 2;
  c.solver.iterations = 4;
  c.output.trials = 3;
  c.output.seed = 5;
  return c;
}

std::string aggregate_bytes(const ExperimentConfig& c, unsigned threads) {
  std::ostringstream out;
  write_aggregate_csv(out, run_experiment(c, threads).aggregate);
  return out.str();
}

}  // namespace

TEST_CASE("expand_series names layouts, sketches and variants") {
  ExperimentConfig c = small_ihs();
  auto s = expand_series(c);
  REQUIRE(s.size() == 4);
  CHECK(s[0].name == "q2_gaussian_ihs");
  CHECK(s[3].name == "q4_sjlt_ihs");
  CHECK(s[3].m_list == std::vector<std::int64_t>{40, 40, 40, 40});

  c.solver.algorithm = Algorithm::newton_sketch;
  c.cluster.q = {10};
  c.cluster.sketches = {SketchKind::gaussian};
  c.solver.policies = {StepPolicy::unbiased, StepPolicy::min_variance};
  c.solver.alphas = {0.5};
  s = expand_series(c);
  REQUIRE(s.size() == 3);
  CHECK(s[0].name == "q10_gaussian_unbiased");
  CHECK(s[1].name == "q10_gaussian_min-variance");
  CHECK(s[2].policy == StepPolicy::fixed);
  CHECK(s[2].alpha == 0.5);

  c.cluster.m_list = {20, 40};
  c.solver.algorithm = Algorithm::ridge_average;
  c.problem.kind = ProblemKind::ridge;
  c.problem.lambda1 = 1.0;
  c.solver.corrections = {RidgeCorrection::zero_bias, RidgeCorrection::vanilla};
  s = expand_series(c);
  REQUIRE(s.size() == 2);
  CHECK(s[1].name == "mlist_gaussian_vanilla");
}

TEST_CASE("aggregate: mean and standard error per t, short traces padded") {
  SolverReport a, b;
  a.algorithm = b.algorithm = "ihs";
  for (int t = 0; t < 3; ++t) a.trace.push_back({t, 1.0 + t, 2.0, 3.0, 10 * t, 0.0});
  for (int t = 0; t < 2; ++t) b.trace.push_back({t, 3.0 + t, 4.0, 3.0, 10 * t, 0.0});
  const auto rows = aggregate("s", {a, b});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].cost_gap_mean == doctest::Approx(2.0));
  CHECK(rows[0].cost_gap_se == doctest::Approx(1.0));  // sd sqrt(2) over sqrt(2) trials
  CHECK(rows[2].cost_gap_mean == doctest::Approx((3.0 + 4.0) / 2.0));
  CHECK(rows[1].rel_x_err_se == 0.0);
  CHECK(rows[2].trials == 2);
}

TEST_CASE("identical config and seed give identical aggregate bytes, serial or parallel") {
  const ExperimentConfig c = small_ihs();
  const std::string serial = aggregate_bytes(c, 1);
  CHECK(aggregate_bytes(c, 1) == serial);
  CHECK(aggregate_bytes(c, 4) == serial);
  ExperimentConfig other = c;
  other.output.seed = 6;
  CHECK(aggregate_bytes(other, 1) != serial);
}

TEST_CASE("write_experiment emits traces, aggregate, summary, config and chart") {
  ExperimentConfig c = small_ihs();
  c.solver.eps = 1e-6;
  c.output.svg = true;
  const auto dir = oracle::scratch_dir("experiment");
  const ExperimentResult r = run_experiment(c, 1);
  write_experiment(r, c, dir);
  CHECK(std::filesystem::exists(dir / "trace_q2_gaussian_ihs_trial0.csv"));
  CHECK(std::filesystem::exists(dir / "trace_q4_sjlt_ihs_trial2.csv"));
  CHECK(std::filesystem::exists(dir / "aggregate.csv"));
  CHECK(std::filesystem::exists(dir / "chart.svg"));
  CHECK(load_config(dir / "config.toml") == c);

  const auto summary = nlohmann::json::parse(oracle::slurp(dir / "summary.json"));
  const auto& first = summary["series"][0];
  CHECK(first["theory"]["ihs_rate"].get<double>() == doctest::Approx(ihs_rate(2, 40, 10)));
  CHECK(first["theory"].contains("predict_iterations"));
  CHECK(first["observed"].contains("contraction_mean"));
  CHECK(first["observed"].contains("iterations_mean_error"));

  const std::string trace = oracle::slurp(dir / "trace_q2_gaussian_ihs_trial0.csv");
  CHECK(trace.rfind("t,cost_gap,errA_sq,rel_x_err,comm_scalars,wall_time_s\n", 0) == 0);
}

TEST_CASE("report JSON and trace CSV") {
  SolverReport r;
  r.algorithm = "ridge-average";
  r.workers.push_back({0, 20, 0.8333, 1.0});
  r.trace.push_back({0, 0.5, 1.0, 1.0, 0, 0.001});
  const auto j = report_json(r);
  CHECK(j["algorithm"] == "ridge-average");
  CHECK(j["workers"][0]["lambda2"].get<double>() == doctest::Approx(0.8333));
  std::ostringstream out;
  write_trace_csv(out, r.trace);
  CHECK(out.str().find("0,0.5,1,1,0,0.001") != std::string::npos);
}

TEST_CASE("svg chart") {
  ChartSeries s{"a", {0, 1, 2}, {1.0, 0.0, 1e-3}};
  const std::string svg = render_line_chart({s}, {"title <x>", "t", "gap"});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("title &lt;x&gt;") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("trivial config: one full-sample IHS step reaches the optimum") {
  ExperimentConfig c = load_config(std::filesystem::path(SKETCHAVG_CONFIG_DIR) / "trivial.toml");
  const ExperimentResult r = run_experiment(c, 1);
  REQUIRE(r.aggregate.size() == 2);
  CHECK(r.aggregate[1].cost_gap_mean < 1e-12);
}

TEST_CASE("shipped configs run at reduced trial counts") {
  for (const auto& entry : std::filesystem::directory_iterator(SKETCHAVG_CONFIG_DIR)) {
    if (entry.path().extension() != ".toml") continue;
    CAPTURE(entry.path().filename().string());
    ExperimentConfig c = load_config(entry.path());
    c.output.trials = 1;
    REQUIRE_NOTHROW(validate(c));
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult r = run_experiment(c, 1);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MESSAGE(entry.path().filename().string(), ": ", seconds, " s");
    CHECK(seconds < 60.0);
    CHECK_FALSE(r.aggregate.empty());
    CHECK(r.summary["series"].size() == r.series.size());
  }
}
