#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sketchavg/error.hpp"
#include "sketchavg/estimators.hpp"

using namespace sketchavg;

namespace {

// Exact rational evaluation in long double, written independently of the library.
long double theta1_exact(long double m, long double d) { return m / (m - d - 1); }
long double theta2_exact(long double m, long double d) {
  return m * m * (m - 1) / ((m - d) * (m - d - 1) * (m - d - 3));
}

}  // namespace

TEST_CASE("theta1") {
  CHECK(theta1(202, 200) == doctest::Approx(202.0));
  CHECK(theta1(400, 200) == doctest::Approx(400.0 / 199.0).epsilon(1e-15));
  CHECK(theta1(1000000000, 200) == doctest::Approx(1.0 + 2.01e-7).epsilon(1e-12));
  CHECK_THROWS_AS(theta1(201, 200), MomentUndefined);
  for (std::int64_t m = 10; m < 300; m += 7)
    CHECK(theta1(m, 5) == doctest::Approx(double(theta1_exact(m, 5))).epsilon(1e-15));
}

TEST_CASE("theta2") {
  CHECK(theta2(400, 200) == doctest::Approx(8.14224).epsilon(1e-6));
  CHECK(theta2(400, 200) == doctest::Approx(double(theta2_exact(400, 200))).epsilon(1e-15));
  CHECK(theta2(2000000000, 3) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(theta2(203, 200), MomentUndefined);
  const MomentPair mp = moments(60, 5);
  CHECK(mp.theta1 == theta1(60, 5));
  CHECK(mp.theta2 == theta2(60, 5));
}

TEST_CASE("theta3 against Marchenko-Pastur quadrature") {
  CHECK(theta3(1.0, 1.0) == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-14));
  CHECK(theta3(0.5, 1e-9) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(theta3(0.5, 0.0) == 2.0);
  CHECK_THROWS_AS(theta3(1.5, 0.0), MomentUndefined);
  for (double gamma : {0.1, 0.7, 3.0}) CHECK(theta3(gamma, 1e6) * 1e6 == doctest::Approx(1.0).epsilon(0.01));

  for (double gamma : {0.05, 0.3, 0.5, 0.9, 2.0, 5.0})
    for (double lam : {0.1, 1.0, 5.0, 40.0})
      CHECK(theta3(gamma, lam) == doctest::Approx(oracle::mp_theta3(gamma, lam)).epsilon(1e-6));
}

TEST_CASE("zero-bias residual") {
  CHECK(std::abs(zero_bias_residual_ridge(5.0, 5.0 / 6.0, 5.0, 1.0)) < 1e-10);
  CHECK(std::abs(zero_bias_residual_ridge(0.0, 1e-12, 0.5, 1.0)) < 1e-10);
  // Vanilla lambda2 = lambda1 leaves a nonzero residual; the value follows from
  // quadrature of theta3(5, 5).
  const double vanilla = zero_bias_residual_ridge(5.0, 5.0, 5.0, 1.0);
  CHECK(vanilla == doctest::Approx(5.0 - 5.0 * oracle::mp_theta3(5.0, 5.0) * 6.0).epsilon(1e-6));
  CHECK(vanilla == doctest::Approx(-0.42993).epsilon(1e-4));
}

TEST_CASE("lambda2_star_ridge") {
  CHECK(lambda2_star_ridge(5.0, 100, 20, 1.0) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
  CHECK(lambda2_ridge_as_printed(5.0, 100, 20, 1.0) == doctest::Approx(25.0 / 6.0).epsilon(1e-14));
  CHECK(lambda2_star_ridge(3.0, 10, 100000000, 2.0) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(lambda2_star_ridge(0.0, 10, 50, 1.0) == 0.0);
  CHECK_THROWS_AS(lambda2_star_ridge(1.0, 100, 20, 1.0), Infeasible);
  CHECK(ridge_correction_feasible(4.0, 100, 20, 1.0));
  CHECK_FALSE(ridge_correction_feasible(3.9, 100, 20, 1.0));

  double prev = -1e300;
  for (std::int64_t m = 20; m <= 2000; m += 20) {
    const double l2 = lambda2_star_ridge(5.0, 100, m, 1.0);
    CHECK(l2 >= prev);
    prev = l2;
  }
}

TEST_CASE("lambda2_star_newton") {
  const double l2 = lambda2_star_newton(1.0, 1, 2, 1.0);
  CHECK(l2 == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(theta3(0.5, l2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lambda2_star_newton(2.0, 1, 100000000, 1.0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(lambda2_star_newton(0.0, 3, 10, 1.5) == doctest::Approx(2.25 * 0.3 / 1.3).epsilon(1e-14));
}

TEST_CASE("closed forms satisfy their defining conditions at random feasible points") {
  std::mt19937_64 gen(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const std::int64_t d = 1 + static_cast<std::int64_t>(u(gen) * 200);
    const std::int64_t m = 1 + static_cast<std::int64_t>(u(gen) * 400);
    const double sigma = 0.2 + 5.0 * u(gen);
    const double gamma = double(d) / double(m);
    const double floor = std::max(0.0, sigma * sigma * (gamma - 1.0));
    const double lambda1 = floor + 0.01 + 20.0 * u(gen);
    const double r = lambda2_star_ridge(lambda1, d, m, sigma);
    if (r > 0.0) CHECK(std::abs(zero_bias_residual_ridge(lambda1, r, gamma, sigma)) < 1e-10 * (1.0 + lambda1));
    const double n2 = lambda2_star_newton(lambda1, d, m, sigma);
    CHECK(theta3(gamma, n2 / (sigma * sigma)) ==
          doctest::Approx(1.0 / (1.0 + lambda1 / (sigma * sigma))).epsilon(1e-10));
  }
}

TEST_CASE("step scalings, ihs_rate, predict_iterations") {
  const StepScaling s = step_scalings(400, 200);
  CHECK(s.alpha_unbiased == doctest::Approx(0.4975).epsilon(1e-14));
  CHECK(s.alpha_minvar == doctest::Approx(200.0 * 197.0 / (400.0 * 399.0)).epsilon(1e-14));
  const StepScaling big = step_scalings(1000000000, 5);
  CHECK(big.alpha_unbiased == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(big.alpha_minvar == doctest::Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(step_scalings(203, 200), MomentUndefined);

  const double rate1 = 399.0 * 199.0 / (200.0 * 197.0) - 1.0;
  CHECK(ihs_rate(1, 400, 200) == doctest::Approx(rate1).epsilon(1e-13));
  CHECK(ihs_rate(8, 400, 200) == doctest::Approx(rate1 / 8.0).epsilon(1e-13));
  CHECK(ihs_rate(1, 1000000, 10) < 1e-4);

  CHECK(predict_iterations(1e-6, 10, 400, 200) ==
        doctest::Approx(std::log(1e6) / (std::log(10.0) - std::log(rate1))).epsilon(1e-12));
  CHECK(predict_iterations(1e-6, 10, 400, 200) == doctest::Approx(6.04).epsilon(1e-3));
  CHECK(predict_iterations(1.0, 3, 400, 200) == 0.0);
  CHECK_THROWS_AS(predict_iterations(1e-6, 1, 400, 200), Error);
}

TEST_CASE("per-worker corrections") {
  const std::vector<std::int64_t> same{40, 40, 40};
  const auto three = per_worker_corrections(2.0, 10, same, 1.0, Regime::ridge);
  REQUIRE(three.size() == 3);
  CHECK(three[0].correction.lambda2_star == three[2].correction.lambda2_star);

  const std::vector<std::int64_t> mixed{20, 50};
  const auto two = per_worker_corrections(5.0, 100, mixed, 1.0, Regime::ridge);
  CHECK(two[0].correction.lambda2_star == doctest::Approx(5.0 / 6.0));
  CHECK(two[1].correction.lambda2_star == doctest::Approx(10.0 / 3.0));

  const std::vector<std::int64_t> bad{50, 20};
  try {
    per_worker_corrections(1.0, 100, bad, 1.0, Regime::ridge);
    FAIL("expected Infeasible");
  } catch (const Infeasible& e) {
    CHECK(e.worker() == 1);
    CHECK(std::string(e.what()).find("worker 1") != std::string::npos);
  }

  const std::vector<std::int64_t> newton{30, 60};
  const auto unreg = per_worker_corrections(0.0, 10, newton, 1.0, Regime::newton);
  REQUIRE(unreg[1].scaling.has_value());
  CHECK(unreg[1].scaling->alpha_unbiased == doctest::Approx(1.0 / theta1(60, 10)));
}
