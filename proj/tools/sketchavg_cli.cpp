#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sketchavg/cluster.hpp"
#include "sketchavg/config.hpp"
#include "sketchavg/error.hpp"
#include "sketchavg/estimators.hpp"
#include "sketchavg/experiment.hpp"
#include "sketchavg/problems.hpp"
#include "sketchavg/verification.hpp"

namespace {

using namespace sketchavg;

constexpr int kRuntimeFailure = 1;
constexpr int kInvalidInput = 2;

struct Common {
  std::string config;
  std::string out_dir;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

struct CalcArgs {
  std::string what;
  std::int64_t m = 0, d = 0, q = 1;
  double eps = 1e-6, lambda1 = 0.0, sigma = 1.0, gamma = 0.0, lambda = 0.0;
};

struct GenArgs {
  std::string kind;
  std::int64_t n = 0, d = 0;
  std::uint64_t seed = 0;
  std::string out;
  double noise = 0.0, lambda1 = 0.0, sigma = 1.0, a_scale = 1.0, bound = 1.0, c_scale = 1.0;
  bool identical_sv = false;
};

void print(double v) { std::cout << std::setprecision(12) << v << '\n'; }

int cmd_calc(const CalcArgs& a) {
  const std::string& w = a.what;
  if (w == "theta1") {
    print(theta1(a.m, a.d));
  } else if (w == "theta2") {
    print(theta2(a.m, a.d));
  } else if (w == "theta3") {
    const double gamma = a.gamma > 0.0 ? a.gamma : static_cast<double>(a.d) / static_cast<double>(a.m);
    print(theta3(gamma, a.lambda));
  } else if (w == "lambda2-ridge") {
    print(lambda2_star_ridge(a.lambda1, a.d, a.m, a.sigma));
    std::cout << "note: the printed form lambda1 - (d/m) / (1 + lambda1/sigma^2) gives "
              << std::setprecision(12) << lambda2_ridge_as_printed(a.lambda1, a.d, a.m, a.sigma)
              << ", which does not satisfy the zero-bias condition\n";
  } else if (w == "lambda2-newton") {
    print(lambda2_star_newton(a.lambda1, a.d, a.m, a.sigma));
  } else if (w == "step-scalings") {
    const StepScaling s = step_scalings(a.m, a.d);
    std::cout << std::setprecision(12) << "alpha_unbiased " << s.alpha_unbiased << "\nalpha_minvar "
              << s.alpha_minvar << '\n';
  } else if (w == "ihs-rate") {
    print(ihs_rate(a.q, a.m, a.d));
  } else if (w == "predict-iters") {
    const double t = predict_iterations(a.eps, a.q, a.m, a.d);
    print(t);
    std::cout << "rounded up: " << std::ceil(t) << '\n';
  } else {
    throw Error("unknown calc quantity '" + w + "'");
  }
  return 0;
}

int cmd_run(const Common& c) {
  if (c.config.empty()) throw Error("run: --config is required");
  ExperimentConfig config = load_config(c.config);
  if (c.trials) config.output.trials = *c.trials;
  if (c.seed) config.output.seed = *c.seed;
  if (c.threads) config.output.threads = *c.threads;
  if (!c.out_dir.empty()) config.output.dir = c.out_dir;
  validate(config);
  const unsigned threads = resolve_threads(config.output.threads);
  const ExperimentResult result = run_experiment(config, threads);
  write_experiment(result, config, config.output.dir);
  std::cout << "wrote " << result.series.size() << " series x " << config.output.trials << " trials to "
            << config.output.dir << '\n';
  return 0;
}

int cmd_gen(const GenArgs& a) {
  const auto kind = parse_problem_kind(a.kind);
  if (!kind) throw Error("gen: unknown problem kind '" + a.kind + "'");
  GenerateOptions opt;
  opt.lambda1 = a.lambda1;
  opt.identical_sv = a.identical_sv;
  opt.sigma = a.sigma;
  opt.a_scale = a.a_scale;
  opt.bound = a.bound;
  opt.c_scale = a.c_scale;
  RngStream rng(a.seed, 0);
  const ProblemModel p = generate_problem(*kind, a.n, a.d, a.noise, rng, opt);
  save_problem(a.out, p, {a.seed, a.noise, opt});
  std::cout << "wrote " << a.kind << " problem (n=" << a.n << ", d=" << a.d << ") to " << a.out << '\n';
  return 0;
}

int cmd_verify(const std::vector<std::string>& requested, const Common& c) {
  std::vector<std::string> suites = requested;
  if (suites.empty() || (suites.size() == 1 && suites[0] == "all")) suites = suite_names();
  VerifyOptions opt;
  if (c.seed) opt.seed = *c.seed;
  opt.threads = resolve_threads(c.threads.value_or(1));
  bool ok = true;
  for (const auto& name : suites) {
    const SuiteResult r = run_suite(name, opt);
    print_suite(std::cout, r);
    ok = ok && r.pass();
  }
  return ok ? 0 : kRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketch-and-average distributed solvers: experiments, formulas, data and checks"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--trials", common.trials, "Override the trial count");
    sub->add_option("--seed", common.seed, "Override the master seed");
    sub->add_option("--threads", common.threads, "Worker threads (0 = all cores; SKETCHAVG_THREADS overrides)");
  };

  auto* run = app.add_subcommand("run", "Run a config-driven experiment");
  run->add_option("--config", common.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", common.out_dir, "Output directory (overrides [output] dir)");
  add_common(run);

  CalcArgs calc;
  auto* calc_cmd = app.add_subcommand("calc", "Evaluate a closed-form quantity");
  calc_cmd->add_option("quantity", calc.what,
                       "theta1 | theta2 | theta3 | lambda2-ridge | lambda2-newton | step-scalings | ihs-rate | "
                       "predict-iters")
      ->required();
  calc_cmd->add_option("--m", calc.m, "Sketch size");
  calc_cmd->add_option("--d", calc.d, "Dimension");
  calc_cmd->add_option("--q", calc.q, "Workers");
  calc_cmd->add_option("--eps", calc.eps, "Target relative error");
  calc_cmd->add_option("--lambda1", calc.lambda1, "Regularization of the original problem");
  calc_cmd->add_option("--sigma", calc.sigma, "Common singular value");
  calc_cmd->add_option("--gamma", calc.gamma, "Aspect ratio d/m (theta3; default d/m)");
  calc_cmd->add_option("--lambda", calc.lambda, "Regularization inside theta3");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random problem as SAMX files plus manifest");
  gen_cmd->add_option("kind", gen.kind, "lstsq | ridge | logistic | barrier")->required();
  gen_cmd->add_option("n", gen.n, "Rows")->required();
  gen_cmd->add_option("d", gen.d, "Columns")->required();
  gen_cmd->add_option("--seed", gen.seed, "Seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--noise", gen.noise, "Noise level");
  gen_cmd->add_option("--lambda1", gen.lambda1, "Regularization");
  gen_cmd->add_flag("--identical-sv", gen.identical_sv, "All singular values of A equal --sigma");
  gen_cmd->add_option("--sigma", gen.sigma, "Common singular value");
  gen_cmd->add_option("--a-scale", gen.a_scale, "Entry scale of Gaussian A");
  gen_cmd->add_option("--bound", gen.bound, "Barrier bound");
  gen_cmd->add_option("--c-scale", gen.c_scale, "Barrier center scale");

  std::vector<std::string> suites;
  auto* verify = app.add_subcommand("verify", "Run Monte Carlo verification suites");
  verify->add_option("suites", suites, "Suite names or 'all'");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidInput;
  }

  try {
    if (*run) return cmd_run(common);
    if (*calc_cmd) return cmd_calc(calc);
    if (*gen_cmd) return cmd_gen(gen);
    if (*verify) return cmd_verify(suites, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.invalid_input() ? kInvalidInput : kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}
