#include "sketchavg/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "sketchavg/estimators.hpp"
#include "sketchavg/report_io.hpp"
#include "sketchavg/svg.hpp"

namespace sketchavg {
namespace {

std::string short_number(double v) {
  std::ostringstream out;
  out << std::setprecision(6) << v;
  return out.str();
}

bool regularized_newton(const ExperimentConfig& c) {
  return c.problem.kind != ProblemKind::lstsq && c.problem.lambda1 > 0.0;
}

struct Step {
  std::string name;
  StepPolicy policy;
  double alpha;
};

std::vector<Step> steps(const SolverSection& s) {
  std::vector<Step> out;
  for (const auto p : s.policies) out.push_back({std::string(to_string(p)), p, 1.0});
  for (const double a : s.alphas) out.push_back({"alpha" + short_number(a), StepPolicy::fixed, a});
  return out;
}

struct Stat {
  double mean = 0.0;
  double se = 0.0;
};

Stat mean_se(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

nlohmann::ordered_json or_null(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json series_summary(const ExperimentConfig& c, const Series& s,
                                      const std::vector<SolverReport>& reports) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["q"] = s.m_list.size();
  j["m_list"] = s.m_list;
  j["sketch"] = std::string(to_string(s.sketch));
  j["variant"] = s.variant;
  j["trials"] = reports.size();
  const auto d = c.problem.d;
  const auto q = static_cast<std::int64_t>(s.m_list.size());
  const bool homogeneous = std::all_of(s.m_list.begin(), s.m_list.end(),
                                       [&](std::int64_t m) { return m == s.m_list.front(); });
  const std::int64_t m = s.m_list.front();

  nlohmann::ordered_json theory;
  nlohmann::ordered_json observed;
  const SolverReport& first = reports.front();
  auto per_worker = [&](auto field) {
    std::vector<double> out;
    for (const auto& w : first.workers) out.push_back(field(w));
    return out;
  };

  switch (c.solver.algorithm) {
    case Algorithm::ihs: {
      theory["mu"] = per_worker([](const WorkerUsage& w) { return w.alpha; });
      std::optional<double> rate, iters;
      if (homogeneous && m > d + 3) {
        rate = ihs_rate(q, m, d);
        if (c.solver.eps > 0.0) {
          try {
            iters = predict_iterations(c.solver.eps, q, m, d);
          } catch (const Infeasible&) {
          }
        }
      }
      theory["ihs_rate"] = or_null(rate);
      theory["predict_iterations"] = or_null(iters);
      theory["predict_iterations_ceil"] = iters ? nlohmann::ordered_json(std::ceil(*iters)) : nullptr;

      std::vector<double> ratios;
      for (const auto& r : reports) {
        if (r.trace.size() >= 2 && r.trace[0].errA_sq > 0.0) ratios.push_back(r.trace[1].errA_sq / r.trace[0].errA_sq);
      }
      observed["contraction_mean"] = mean_se(ratios).mean;
      observed["contraction_se"] = mean_se(ratios).se;
      if (c.solver.eps > 0.0) {
        // First t at which the trial-averaged relative error reaches eps.
        std::optional<double> crossing;
        for (std::size_t t = 0; t < first.trace.size() && !crossing; ++t) {
          std::vector<double> rel;
          for (const auto& r : reports) rel.push_back(r.trace[t].errA_sq / r.trace[0].errA_sq);
          if (mean_se(rel).mean <= c.solver.eps) crossing = static_cast<double>(t);
        }
        observed["iterations_mean_error"] = or_null(crossing);
        std::vector<double> passages;
        for (const auto& r : reports) {
          if (r.observed_iterations) passages.push_back(*r.observed_iterations);
        }
        observed["iterations_per_trial_mean"] =
            passages.size() == reports.size() ? nlohmann::ordered_json(mean_se(passages).mean) : nullptr;
      }
      break;
    }
    case Algorithm::ridge_average: {
      theory["sigma"] = first.sigma;
      theory["lambda1"] = c.problem.lambda1;
      theory["lambda2"] = per_worker([](const WorkerUsage& w) { return w.lambda2; });
      std::vector<double> star;
      for (const auto mk : s.m_list) {
        try {
          star.push_back(lambda2_star_ridge(c.problem.lambda1, d, mk, first.sigma));
        } catch (const Infeasible&) {
          star.push_back(std::nan(""));
        }
      }
      nlohmann::ordered_json star_json = nlohmann::ordered_json::array();
      for (double v : star) star_json.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nullptr);
      theory["lambda2_star"] = star_json;
      break;
    }
    case Algorithm::newton_sketch: {
      theory["alpha_s"] = per_worker([](const WorkerUsage& w) { return w.alpha; });
      if (homogeneous && m > d + 3) {
        const StepScaling sc = step_scalings(m, d);
        theory["alpha_unbiased"] = sc.alpha_unbiased;
        theory["alpha_minvar"] = sc.alpha_minvar;
      }
      if (regularized_newton(c)) {
        theory["sigma_final_iterate"] = first.sigma;
        theory["lambda2_final_iterate"] = per_worker([](const WorkerUsage& w) { return w.lambda2; });
      }
      std::vector<double> iters;
      for (const auto& r : reports) iters.push_back(r.trace.back().t);
      observed["iterations_mean"] = mean_se(iters).mean;
      break;
    }
  }

  std::vector<double> gaps, errs;
  int rejected = 0;
  for (const auto& r : reports) {
    gaps.push_back(curve(r).back().cost_gap);
    errs.push_back(curve(r).back().rel_x_err);
    rejected += r.rejected_steps;
  }
  observed["final_cost_gap_mean"] = mean_se(gaps).mean;
  observed["final_rel_x_err_mean"] = mean_se(errs).mean;
  observed["final_rel_x_err_se"] = mean_se(errs).se;
  observed["comm_scalars"] = first.trace.back().comm_scalars;
  observed["rejected_steps"] = rejected;
  j["theory"] = theory;
  j["observed"] = observed;
  j["warnings"] = first.warnings;
  return j;
}

}  // namespace

std::vector<Series> expand_series(const ExperimentConfig& c) {
  std::vector<std::vector<std::int64_t>> layouts;
  std::vector<std::string> labels;
  if (!c.cluster.m_list.empty()) {
    layouts.push_back(c.cluster.m_list);
    labels.push_back("mlist");
  } else {
    for (const auto q : c.cluster.q) {
      layouts.emplace_back(static_cast<std::size_t>(q), c.cluster.m);
      labels.push_back("q" + std::to_string(q));
    }
  }

  std::vector<Series> variants;
  switch (c.solver.algorithm) {
    case Algorithm::ihs:
      variants.emplace_back().variant = "ihs";
      break;
    case Algorithm::ridge_average:
      for (const auto corr : c.solver.corrections) {
        Series& v = variants.emplace_back();
        v.variant = std::string(to_string(corr));
        v.correction = corr;
      }
      break;
    case Algorithm::newton_sketch: {
      const auto all_steps = steps(c.solver);
      const bool reg = regularized_newton(c);
      const bool single = all_steps.size() == 1 && c.solver.alphas.empty();
      const std::vector<std::string> lambda2 = reg ? c.solver.lambda2 : std::vector<std::string>{""};
      for (const auto& l2 : lambda2) {
        for (const auto& st : all_steps) {
          Series& v = variants.emplace_back();
          v.variant = reg ? (single ? l2 : l2 + "-" + st.name) : st.name;
          v.corrected = l2 != "vanilla";
          v.policy = st.policy;
          v.alpha = st.alpha;
        }
      }
      break;
    }
  }

  std::vector<Series> out;
  for (std::size_t l = 0; l < layouts.size(); ++l) {
    for (const auto kind : c.cluster.sketches) {
      for (const auto& v : variants) {
        Series s = v;
        s.m_list = layouts[l];
        s.sketch = kind;
        s.name = labels[l] + "_" + std::string(to_string(kind)) + "_" + v.variant;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

ProblemModel build_problem(const ExperimentConfig& c) {
  const auto& p = c.problem;
  GenerateOptions opt;
  opt.lambda1 = p.lambda1;
  opt.identical_sv = p.identical_sv;
  opt.sigma = p.sigma;
  opt.a_scale = p.a_scale;
  opt.bound = p.bound;
  opt.c_scale = p.c_scale;
  RngStream rng(c.output.seed, 0);
  return generate_problem(p.kind, p.n, p.d, p.noise, rng, opt);
}

ClusterConfig build_cluster(const ExperimentConfig& c, const Series& s, int trial) {
  std::vector<SketchSpec> specs;
  for (const auto m : s.m_list) specs.push_back({s.sketch, m, c.cluster.s, c.cluster.m2, c.cluster.inner});
  const std::uint64_t seed = mix64(c.output.seed ^ mix64(static_cast<std::uint64_t>(trial) + 1));
  ClusterConfig cluster = make_cluster(seed, specs);
  cluster.partitioned = c.cluster.partitioned;
  cluster.threads = 1;
  return cluster;
}

SolverReport run_series(const ExperimentConfig& c, const ProblemModel& problem, const Reference& ref,
                        const Series& s, int trial) {
  const ClusterConfig cluster = build_cluster(c, s, trial);
  switch (c.solver.algorithm) {
    case Algorithm::ihs:
      return dist_ihs(problem, cluster, {c.solver.iterations, c.solver.mu, c.solver.eps}, &ref);
    case Algorithm::ridge_average: {
      RidgeOptions opt;
      opt.correction = s.correction;
      opt.sigma = c.solver.sigma;
      return dist_ridge_average(problem, cluster, opt, &ref);
    }
    case Algorithm::newton_sketch: {
      NewtonOptions opt;
      opt.policy = s.policy;
      opt.fixed_alpha = s.alpha;
      opt.bias_corrected = s.corrected;
      opt.eps = c.solver.eps;
      opt.max_iters = c.solver.iterations;
      opt.sigma_mode = c.solver.sigma_mode;
      opt.alpha1 = c.solver.alpha1;
      opt.line_search = c.solver.line_search;
      return dist_newton_sketch(problem, cluster, opt, &ref);
    }
  }
  throw Error("unknown algorithm");
}

const ConvergenceTrace& curve(const SolverReport& report) {
  return report.partial.empty() ? report.trace : report.partial;
}

std::vector<AggregateRow> aggregate(const std::string& name, const std::vector<SolverReport>& trials) {
  std::size_t len = 0;
  for (const auto& r : trials) len = std::max(len, curve(r).size());
  std::vector<AggregateRow> rows;
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> gap, err, rel;
    AggregateRow row;
    row.series = name;
    for (const auto& r : trials) {
      const auto& tr = curve(r);
      const TraceRecord& rec = tr[std::min(i, tr.size() - 1)];
      gap.push_back(rec.cost_gap);
      err.push_back(rec.errA_sq);
      rel.push_back(rec.rel_x_err);
      if (i < tr.size()) {
        row.t = rec.t;
        row.comm_scalars = rec.comm_scalars;
      }
    }
    row.trials = static_cast<int>(trials.size());
    const Stat g = mean_se(gap), e = mean_se(err), x = mean_se(rel);
    row.cost_gap_mean = g.mean;
    row.cost_gap_se = g.se;
    row.errA_sq_mean = e.mean;
    row.errA_sq_se = e.se;
    row.rel_x_err_mean = x.mean;
    row.rel_x_err_se = x.se;
    rows.push_back(row);
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  validate(config);
  ExperimentResult result;
  result.series = expand_series(config);
  const ProblemModel problem = build_problem(config);
  const Reference ref = make_reference(problem);

  const std::size_t ns = result.series.size();
  const auto nt = static_cast<std::size_t>(config.output.trials);
  result.reports.assign(ns, std::vector<SolverReport>(nt));
  std::vector<std::exception_ptr> errors(ns * nt);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t task = next.fetch_add(1); task < ns * nt; task = next.fetch_add(1)) {
      const std::size_t s = task / nt;
      const std::size_t trial = task % nt;
      try {
        result.reports[s][trial] = run_series(config, problem, ref, result.series[s], static_cast<int>(trial));
      } catch (...) {
        errors[task] = std::current_exception();
      }
    }
  };
  const unsigned pool_size = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), ns * nt));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < pool_size; ++i) pool.emplace_back(drain);
    drain();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  nlohmann::ordered_json series_json = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < ns; ++s) {
    const auto rows = aggregate(result.series[s].name, result.reports[s]);
    result.aggregate.insert(result.aggregate.end(), rows.begin(), rows.end());
    series_json.push_back(series_summary(config, result.series[s], result.reports[s]));
  }
  auto& sum = result.summary;
  sum["algorithm"] = std::string(to_string(config.solver.algorithm));
  sum["problem"] = {{"kind", std::string(to_string(problem.kind))},
                    {"n", problem.n()},
                    {"d", problem.d()},
                    {"lambda1", problem.lambda1},
                    {"identical_sv", config.problem.identical_sv},
                    {"f_star", ref.f_star}};
  sum["trials"] = config.output.trials;
  sum["seed"] = config.output.seed;
  sum["series"] = series_json;
  return result;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "series,t,trials,cost_gap_mean,cost_gap_se,errA_sq_mean,errA_sq_se,rel_x_err_mean,"
         "rel_x_err_se,comm_scalars\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.series << ',' << r.t << ',' << r.trials << ',' << r.cost_gap_mean << ',' << r.cost_gap_se
        << ',' << r.errA_sq_mean << ',' << r.errA_sq_se << ',' << r.rel_x_err_mean << ','
        << r.rel_x_err_se << ',' << r.comm_scalars << '\n';
  }
}

void write_experiment(const ExperimentResult& result, const ExperimentConfig& config,
                      const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message(), false);
  for (std::size_t s = 0; s < result.series.size(); ++s) {
    for (std::size_t t = 0; t < result.reports[s].size(); ++t) {
      write_trace_csv(dir / ("trace_" + result.series[s].name + "_trial" + std::to_string(t) + ".csv"),
                      curve(result.reports[s][t]));
    }
  }
  {
    const auto path = dir / "aggregate.csv";
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'", false);
    write_aggregate_csv(out, result.aggregate);
  }
  write_json(dir / "summary.json", result.summary);
  {
    const auto path = dir / "config.toml";
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'", false);
    out << format_config(config);
  }
  if (config.output.svg) {
    const bool ridge = config.solver.algorithm == Algorithm::ridge_average;
    std::vector<ChartSeries> charts;
    for (const auto& s : result.series) {
      ChartSeries cs{s.name, {}, {}};
      for (const auto& row : result.aggregate) {
        if (row.series != s.name) continue;
        cs.x.push_back(row.t);
        cs.y.push_back(ridge ? row.rel_x_err_mean : row.cost_gap_mean);
      }
      charts.push_back(std::move(cs));
    }
    ChartOptions opt;
    opt.title = std::string(to_string(config.solver.algorithm));
    opt.x_label = ridge ? "workers averaged" : "iteration";
    opt.y_label = ridge ? "||x - x*|| / ||x*||" : "(f(x_t) - f*) / f*";
    write_line_chart(dir / "chart.svg", charts, opt);
  }
}

}  // namespace sketchavg
