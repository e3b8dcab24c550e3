#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>

#include "oracles.hpp"
#include "sketchavg/linalg.hpp"
#include "sketchavg/problems.hpp"
#include "sketchavg/solvers.hpp"

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome cli(const std::string& args) {
  const std::string cmd = std::string(SKETCHAVG_CLI) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) o.out += buf;
  const int status = ::pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

}  // namespace

TEST_CASE("calc prints closed forms to 12 significant digits") {
  Outcome o = cli("calc lambda2-ridge --lambda1 5 --d 100 --m 20 --sigma 1");
  CHECK(o.code == 0);
  CHECK(o.out.find("0.833333333333") != std::string::npos);
  CHECK(o.out.find("4.16666666667") != std::string::npos);

  o = cli("calc predict-iters --eps 1e-6 --q 10 --m 400 --d 200");
  CHECK(o.code == 0);
  CHECK(o.out.rfind("6.0397088", 0) == 0);
  CHECK(o.out.find("rounded up: 7") != std::string::npos);

  o = cli("calc step-scalings --m 400 --d 200");
  CHECK(o.out.find("alpha_unbiased 0.4975") != std::string::npos);
  CHECK(o.out.find("alpha_minvar 0.246867167") != std::string::npos);

  CHECK(cli("calc theta3 --gamma 1 --lambda 1").out.rfind("0.61803398875", 0) == 0);
  CHECK(cli("calc lambda2-newton --lambda1 1 --d 1 --m 2 --sigma 1").out.rfind("1.2", 0) == 0);
}

TEST_CASE("exit codes") {
  Outcome o = cli("calc theta1 --m 201 --d 200");
  CHECK(o.code == 2);
  CHECK(o.out.find("error") != std::string::npos);
  CHECK(cli("calc lambda2-ridge --lambda1 1 --d 100 --m 20 --sigma 1").code == 2);
  CHECK(cli("calc nonsense").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("run").code == 2);
  CHECK(cli("verify no-such-suite").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("gen writes reloadable, byte-identical problems") {
  const auto dir = oracle::scratch_dir("cli_gen");
  REQUIRE(cli("gen lstsq 1000 100 --seed 7 --out " + (dir / "a").string()).code == 0);
  REQUIRE(cli("gen lstsq 1000 100 --seed 7 --out " + (dir / "b").string()).code == 0);
  for (const char* f : {"A.samx", "target.samx", "planted.samx", "manifest.json"})
    CHECK(oracle::slurp(dir / "a" / f) == oracle::slurp(dir / "b" / f));
  const auto p = sketchavg::load_problem(dir / "a");
  CHECK(oracle::rel_err(sketchavg::solve_direct(p), *p.planted) < 1e-8);

  REQUIRE(cli("gen ridge 200 20 --seed 3 --identical-sv --sigma 2 --lambda1 1 --out " + (dir / "r").string())
              .code == 0);
  const auto r = sketchavg::load_problem(dir / "r");
  CHECK((sketchavg::singular_values(r.A).array() - 2.0).abs().maxCoeff() < 1e-10);
  CHECK(r.lambda1 == 1.0);

  CHECK(cli("gen lasso 10 2 --out " + (dir / "x").string()).code == 2);
}

TEST_CASE("run: trivial config, determinism, invalid configs") {
  const auto dir = oracle::scratch_dir("cli_run");
  const std::string cfg = std::string(SKETCHAVG_CONFIG_DIR) + "/trivial.toml";
  REQUIRE(cli("run --config " + cfg + " --out-dir " + (dir / "a").string()).code == 0);
  REQUIRE(cli("run --config " + cfg + " --out-dir " + (dir / "b").string() + " --threads 3").code == 0);
  CHECK(oracle::slurp(dir / "a" / "aggregate.csv") == oracle::slurp(dir / "b" / "aggregate.csv"));
  CHECK(std::filesystem::exists(dir / "a" / "summary.json"));

  std::ofstream(dir / "bad.toml") << "[problem]\nkind = \"lstsq\"\nn = 100\nd = x\n";
  Outcome o = cli("run --config " + (dir / "bad.toml").string());
  CHECK(o.code == 2);
  CHECK(o.out.find("line 4") != std::string::npos);

  std::ofstream(dir / "infeasible.toml")
      << "[problem]\nkind = \"ridge\"\nn = 1000\nd = 100\nlambda1 = 1\nidentical_sv = true\n"
         "[cluster]\nm = 20\n[solver]\nalgorithm = \"ridge-average\"\n";
  o = cli("run --config " + (dir / "infeasible.toml").string());
  CHECK(o.code == 2);
  CHECK(o.out.find("no unbiased lambda2 exists") != std::string::npos);
}

TEST_CASE("verify prints a table and a verdict") {
  Outcome o = cli("verify lambda derivs");
  CHECK(o.code == 0);
  CHECK(o.out.find("PASS lambda") != std::string::npos);
  CHECK(o.out.find("PASS derivs") != std::string::npos);
  CHECK(o.out.find("observed") != std::string::npos);
}
