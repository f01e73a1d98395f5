#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "smoothnest/problems/newsvendor.hpp"
#include "smoothnest/problems/portfolio.hpp"
#include "smoothnest/problems/test_function.hpp"

using namespace smoothnest;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double black_scholes_call(double s, double k, double r, double sigma, double tau) {
  const double sst = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * tau) / sst;
  return s * oracle::normal_cdf(d1) - k * std::exp(-r * tau) * oracle::normal_cdf(d1 - sst);
}

double sample_mean(const VectorXd& v) { return v.mean(); }

double sample_se(const VectorXd& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

VectorXd state(double s, double g, double mx) {
  VectorXd x(3);
  x << s, g, mx;
  return x;
}

}  // namespace

// ---- test function ----------------------------------------------------------

TEST_CASE("test function construction is deterministic and within its ranges") {
  TestFunctionProblem a = testfn_make(4, 2.5, 17);
  TestFunctionProblem b = testfn_make(4, 2.5, 17);
  TestFunctionProblem c = testfn_make(4, 2.5, 18);
  CHECK(a.centers == b.centers);
  CHECK(a.coeffs == b.coeffs);
  CHECK(a.centers != c.centers);
  CHECK(a.centers.rows() == kTestFunctionCenters);
  CHECK(a.coeffs.minCoeff() >= 20.0);
  CHECK(a.coeffs.maxCoeff() <= 50.0);
  CHECK(a.centers.allFinite());
  CHECK(a.noise_sd == doctest::Approx(std::sqrt(0.1)));
  CHECK(a.spec.ell() == 1.0);
  for (int j = 0; j < kTestFunctionCenters; ++j) CHECK(a.f(a.centers.row(j).transpose()) >= a.coeffs(j));
  CHECK_THROWS_AS(testfn_make(0, 2.5, 1), std::invalid_argument);
}

TEST_CASE("test function values match a direct kernel sum") {
  TestFunctionProblem p = testfn_make(3, 1.5, 5);
  oracle::Gen g(71);
  MatrixXd xs = oracle::uniform_matrix(g, 50, 3, -1.0, 1.0);
  VectorXd batch = p.f_batch(xs);
  for (int i = 0; i < 50; ++i) {
    double ref = 0.0;
    for (int j = 0; j < kTestFunctionCenters; ++j)
      ref += p.coeffs(j) * oracle::kernel_at(1.5, 1.0, xs.row(i).transpose(), p.centers.row(j).transpose());
    CHECK(batch(i) == doctest::Approx(ref).epsilon(1e-10));
    CHECK(p.f(xs.row(i).transpose()) == doctest::Approx(batch(i)).epsilon(1e-14));
  }
}

TEST_CASE("simulated test-function data") {
  TestFunctionProblem p = testfn_make(2, 2.5, 3);
  SimulatedData sim = testfn_simulate(p, 200, 10000, 9);
  CHECK(sim.data.scenarios().cwiseAbs().maxCoeff() <= 1.0);
  CHECK(sim.data.inner_count() == 10000);
  const double bound = 5.0 * std::sqrt(0.1 / 10000.0);
  CHECK((sim.data.inner_means() - sim.true_values).cwiseAbs().maxCoeff() <= bound);
  CHECK((sim.true_values - p.f_batch(sim.data.scenarios())).cwiseAbs().maxCoeff() == 0.0);

  SimulatedData again = testfn_simulate(p, 200, 10000, 9);
  CHECK(again.data.inner_means() == sim.data.inner_means());

  TestFunctionProblem quiet = p;
  quiet.noise_sd = 0.0;
  SimulatedData exact = testfn_simulate(quiet, 100, 7, 9);
  CHECK(exact.data.inner_means() == exact.true_values);
}

TEST_CASE("truncated scenarios keep the normal shape inside the box") {
  TestFunctionProblem p = testfn_make(1, 0.5, 1);
  Rng rng = derive_stream(4, {1});
  MatrixXd x = testfn_outer(p, 100000, rng);
  // Truncation at about 3.16 sd removes a negligible mass: the variance
  // stays within a few percent of 0.1.
  const double var = (x.array() - x.mean()).square().mean();
  CHECK(var == doctest::Approx(0.1).epsilon(0.03));
  CHECK(std::abs(x.mean()) < 4.0 * std::sqrt(0.1 / 100000.0));
}

TEST_CASE("true theta of a constant function is exact") {
  TestFunctionProblem p = testfn_make(2, 0.5, 1);
  p.spec = KernelSpec(0.5, 1e300);
  p.coeffs.setZero();
  p.coeffs(0) = 25.0;
  TrueTheta t = testfn_true_theta(p, Functional::identity(), 10000, 3);
  CHECK(t.value == 25.0);
  CHECK(t.std_error == 0.0);
  CHECK_THROWS_AS(testfn_true_theta(p, Functional::identity(), 9999, 3), std::invalid_argument);
}

TEST_CASE("true theta oracle: seed agreement and standard-error scaling") {
  TestFunctionProblem p = testfn_make(2, 2.5, 8);
  TrueTheta a = testfn_true_theta(p, Functional::value_at_risk(0.5), 100000, 1);
  TrueTheta b = testfn_true_theta(p, Functional::value_at_risk(0.5), 100000, 2);
  CHECK(std::abs(a.value - b.value) <= 3.0 * std::hypot(a.std_error, b.std_error));
  TrueTheta small = testfn_true_theta(p, Functional::identity(), 20000, 5);
  TrueTheta big = testfn_true_theta(p, Functional::identity(), 200000, 5);
  const double ratio = small.std_error / big.std_error;
  CHECK(ratio > std::sqrt(10.0) * 0.9);
  CHECK(ratio < std::sqrt(10.0) * 1.1);
  CHECK(big.mc_n == 200000);
}

TEST_CASE("standard error of an expectation is the classical one") {
  oracle::Gen g(72);
  VectorXd z(5000);
  for (auto& v : z) v = oracle::normal(g);
  TrueTheta t = mc_theta(Functional::identity(), z);
  CHECK(t.value == doctest::Approx(sample_mean(z)).epsilon(1e-13));
  CHECK(t.std_error == doctest::Approx(sample_se(z)).epsilon(1e-12));
}

// ---- portfolio ---------------------------------------------------------------

TEST_CASE("portfolio construction") {
  PortfolioProblem p = portfolio_make(3, 42);
  CHECK(p.dim() == 9);
  CHECK(p.t0() == doctest::Approx(0.06));
  CHECK(p.outer_steps() == 12);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (j < i) {
        CHECK(p.vol(i, j) == 0.0);
      } else {
        CHECK(p.vol(i, j) >= 0.05 / std::sqrt(3.0));
        CHECK(p.vol(i, j) <= 0.35 / std::sqrt(3.0));
      }
    }
    CHECK(p.sigma(i) == doctest::Approx(p.vol.row(i).norm()));
  }
  CHECK(portfolio_make(3, 42).vol == p.vol);
  CHECK(p.v0 > 0.0);
  MatrixXd lower = MatrixXd::Identity(2, 2) * 0.2;
  lower(1, 0) = 0.1;
  CHECK_THROWS_AS(portfolio_make(lower), std::invalid_argument);
  CHECK_THROWS_AS(portfolio_make(0, 1), std::invalid_argument);
}

TEST_CASE("time-zero value is the sum of single-asset closed forms") {
  MatrixXd vol(1, 1);
  vol << 0.2;
  PortfolioProblem p = portfolio_make(vol);
  double ref = 0.0;
  for (double k : {90.0, 100.0, 110.0}) {
    ref += geometric_asian_call(100.0, 0.0, 0, 50, 0.02, 0.05, 0.2, k);
    ref += up_and_out_call(100.0, 100.0, k, 150.0, 0.05, 0.2, 1.0);
  }
  CHECK(p.v0 == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("a one-monitor geometric Asian option is a European call") {
  for (double k : {80.0, 100.0, 125.0}) {
    const double asian = geometric_asian_call(100.0, 0.0, 0, 1, 0.75, 0.05, 0.3, k);
    CHECK(asian == doctest::Approx(black_scholes_call(100.0, k, 0.05, 0.3, 0.75)).epsilon(1e-12));
  }
}

TEST_CASE("geometric Asian option in the zero-volatility limit") {
  const double s = 104.0, g0 = 101.0, h = 0.02, r = 0.05, k = 100.0;
  const int past = 3, total = 50, left = total - past;
  double log_sum = past * std::log(g0);
  for (int j = 1; j <= left; ++j) log_sum += std::log(s) + r * j * h;
  const double g_det = std::exp(log_sum / total);
  const double ref = std::exp(-r * left * h) * std::max(g_det - k, 0.0);
  CHECK(geometric_asian_call(s, std::log(g0), past, total, h, r, 1e-9, k) == doctest::Approx(ref).epsilon(1e-8));
  CHECK(geometric_asian_call(s, std::log(g0), past, total, h, r, 0.0, k) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("up-and-out call limits") {
  // Unreachable barrier: plain call.
  CHECK(up_and_out_call(100.0, 100.0, 95.0, 1e9, 0.05, 0.25, 0.9) ==
        doctest::Approx(black_scholes_call(100.0, 95.0, 0.05, 0.25, 0.9)).epsilon(1e-10));
  CHECK(up_and_out_call(100.0, 151.0, 95.0, 150.0, 0.05, 0.25, 0.9) == 0.0);
  CHECK(up_and_out_call(150.0, 150.0, 95.0, 150.0, 0.05, 0.25, 0.9) == 0.0);
  CHECK(up_and_out_call(100.0, 100.0, 150.0, 150.0, 0.05, 0.25, 0.9) == 0.0);
  double prev = 0.0;
  for (double h = 105.0; h < 400.0; h += 5.0) {
    const double v = up_and_out_call(100.0, 100.0, 100.0, h, 0.05, 0.25, 0.9);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  CHECK(up_and_out_call(120.0, 130.0, 100.0, 150.0, 0.05, 0.2, 0.0) == 20.0);
}

TEST_CASE("bridge crossing probability") {
  const double lh = std::log(150.0);
  CHECK(bridge_crossing_probability(lh, std::log(100.0), lh, 0.2, 0.005) == 1.0);
  CHECK(bridge_crossing_probability(std::log(100.0), lh + 0.1, lh, 0.2, 0.005) == 1.0);
  oracle::Gen g(73);
  for (int i = 0; i < 1000; ++i) {
    const double a = lh - oracle::uniform(g, 0.0, 0.3), b = lh - oracle::uniform(g, 0.0, 0.3);
    const double sigma = oracle::uniform(g, 0.01, 0.5), dt = oracle::uniform(g, 1e-4, 0.1);
    const double p = bridge_crossing_probability(a, b, lh, sigma, dt);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(p == doctest::Approx(std::exp(-2.0 * (lh - a) * (lh - b) / (sigma * sigma * dt))).epsilon(1e-12));
  }
}

TEST_CASE("zero-volatility outer paths grow at the real-world drift") {
  MatrixXd vol = MatrixXd::Zero(2, 2);
  PortfolioProblem p = portfolio_make(vol);
  MatrixXd x = gbm_simulate_outer(p, 3, 5);
  const double st = 100.0 * std::exp(0.08 * p.t0());
  // Monitors at t_1, t_2, t_3.
  const double g = 100.0 * std::exp(0.08 * (0.02 + 0.04 + 0.06) / 3.0);
  for (int r = 0; r < 3; ++r) {
    for (int i = 0; i < 2; ++i) {
      CHECK(x(r, i) == doctest::Approx(st).epsilon(1e-12));
      CHECK(x(r, 2 + i) == doctest::Approx(g).epsilon(1e-12));
      CHECK(x(r, 4 + i) == doctest::Approx(st).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero-volatility inner paths grow at the risk-free rate") {
  MatrixXd vol = MatrixXd::Zero(1, 1);
  PortfolioProblem p = portfolio_make(vol);
  const VectorXd x = state(104.0, 101.0, 105.0);
  Rng rng = derive_stream(1, {2});
  const double w = portfolio_payoff_sample(p, x, rng);
  const double tau = 1.0 - p.t0();
  const double st = 104.0 * std::exp(0.05 * tau);
  double log_sum = 3.0 * std::log(101.0);
  for (int j = 1; j <= 47; ++j) log_sum += std::log(104.0) + 0.05 * j * 0.02;
  const double g = std::exp(log_sum / 50.0);
  double ref = 0.0;
  for (double k : {90.0, 100.0, 110.0}) ref += std::max(g - k, 0.0) + std::max(st - k, 0.0);
  ref *= std::exp(-0.05 * tau);
  CHECK(w == doctest::Approx(ref).epsilon(1e-12));
  // The closed form agrees in this degenerate case.
  CHECK(portfolio_price_closed_form(p, x) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("generated risk factors are consistent") {
  PortfolioProblem p = portfolio_make(3, 7);
  MatrixXd x = gbm_simulate_outer(p, 5000, 11);
  CHECK(x == gbm_simulate_outer(p, 5000, 11));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int i = 0; i < 3; ++i) {
      CHECK(x(r, 6 + i) >= x(r, i));
      CHECK(x(r, 6 + i) >= x(r, 3 + i));
      CHECK(x(r, 6 + i) >= 100.0);
      CHECK(x(r, 3 + i) > 0.0);
    }
    CHECK_NOTHROW(check_risk_factors(p, x.row(r).transpose()));
  }
}

TEST_CASE("risk-factor validation") {
  PortfolioProblem p = portfolio_make(1, 7);
  CHECK_THROWS_AS(check_risk_factors(p, VectorXd::Constant(2, 100.0)), std::invalid_argument);
  CHECK_THROWS_AS(check_risk_factors(p, state(110.0, 100.0, 105.0)), std::invalid_argument);
  CHECK_THROWS_AS(check_risk_factors(p, state(100.0, 120.0, 110.0)), std::invalid_argument);
  CHECK_THROWS_AS(check_risk_factors(p, state(-1.0, 100.0, 110.0)), std::invalid_argument);
  CHECK_THROWS_AS(portfolio_inner_sample(p, state(110.0, 100.0, 105.0), 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(portfolio_price_closed_form(p, state(110.0, 100.0, 105.0)), std::invalid_argument);
}

TEST_CASE("knocked-out barrier legs contribute nothing") {
  PortfolioProblem p = portfolio_make(1, 3);
  const VectorXd x = state(120.0, 105.0, 150.0);
  double asian_only = 0.0;
  for (double k : p.strikes)
    asian_only += geometric_asian_call(120.0, std::log(105.0), 3, 50, 0.02, 0.05, p.sigma(0), k);
  CHECK(portfolio_price_closed_form(p, x) == doctest::Approx(asian_only).epsilon(1e-14));
  // Simulated barrier legs are zero too; with zero volatility the payoff is
  // the Asian legs alone, known in closed form.
  PortfolioProblem still = portfolio_make(MatrixXd::Zero(1, 1));
  Rng rng = derive_stream(5, {1});
  const double w = portfolio_payoff_sample(still, x, rng);
  double log_sum = 3.0 * std::log(105.0);
  for (int j = 1; j <= 47; ++j) log_sum += std::log(120.0) + 0.05 * j * 0.02;
  const double g = std::exp(log_sum / 50.0);
  double ref = 0.0;
  for (double k : still.strikes) ref += std::max(g - k, 0.0);
  CHECK(w == doctest::Approx(std::exp(-0.05 * (1.0 - still.t0())) * ref).epsilon(1e-12));
}

TEST_CASE("far out-of-the-money strikes give zero payoffs") {
  PortfolioProblem p = portfolio_make(2, 3);
  p.strikes = {1e6};
  MatrixXd x = gbm_simulate_outer(p, 3, 1);
  for (int r = 0; r < 3; ++r) {
    VectorXd y = portfolio_inner_sample(p, x.row(r).transpose(), 50, 2);
    CHECK((y.array() == p.v0).all());
  }
}

TEST_CASE("inner samples are reproducible and their mean tracks the closed form") {
  PortfolioProblem p = portfolio_make(1, 5);
  const VectorXd x = state(102.0, 100.5, 108.0);
  VectorXd a = portfolio_inner_sample(p, x, 200000, 3);
  CHECK(a == portfolio_inner_sample(p, x, 200000, 3));
  const VectorXd w = (p.v0 - a.array()).matrix();
  const double price = portfolio_price_closed_form(p, x);
  CHECK(std::abs(sample_mean(w) - price) <= std::max(4.0 * sample_se(w), 0.01 * price));
}

TEST_CASE("portfolio true theta oracle") {
  PortfolioProblem flat = portfolio_make(2, 9, 0);
  TrueTheta z0 = portfolio_true_theta(flat, Functional::identity(), 10000, 1);
  CHECK(z0.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  PortfolioProblem p = portfolio_make(2, 9);
  TrueTheta a = portfolio_true_theta(p, Functional::identity(), 20000, 1);
  TrueTheta b = portfolio_true_theta(p, Functional::identity(), 20000, 2);
  CHECK(std::abs(a.value - b.value) <= 4.0 * std::hypot(a.std_error, b.std_error));
  TrueTheta v95 = portfolio_true_theta(p, Functional::value_at_risk(0.95), 20000, 1);
  TrueTheta v99 = portfolio_true_theta(p, Functional::value_at_risk(0.99), 20000, 1);
  CHECK(v99.value >= v95.value);
}

// ---- newsvendor --------------------------------------------------------------

TEST_CASE("newsvendor parameters") {
  NewsvendorProblem p = newsvendor_make(3);
  CHECK(p.price(0) == doctest::Approx(3.2));
  CHECK(p.price(2) == doctest::Approx(3.6));
  CHECK(p.prior_mean(1) == doctest::Approx(5.6));
  CHECK(p.cost(2) == 2.0);
  VectorXd star = newsvendor_fractile(p);
  CHECK(star(0) == doctest::Approx(100.0 + 400.0 * 1.2 / 3.2));
  CHECK_THROWS_AS(newsvendor_make(0), std::invalid_argument);
  NewsvendorProblem bad = p;
  bad.cost(1) = 10.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("choice probabilities are stable for extreme utilities") {
  NewsvendorProblem p = newsvendor_make(3);
  VectorXd big = VectorXd::Constant(3, 1000.0);
  VectorXd v = newsvendor_choice(p, big);
  CHECK(v.allFinite());
  CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
  VectorXd small = VectorXd::Constant(3, -100.0);
  CHECK(newsvendor_choice(p, small).maxCoeff() < 1e-40);
  VectorXd mid(3);
  mid << 5.0, 6.0, 4.0;
  VectorXd w = newsvendor_choice(p, mid);
  double denom = 1.0;
  for (int i = 0; i < 3; ++i) denom += std::exp(mid(i) - p.price(i));
  for (int i = 0; i < 3; ++i) CHECK(w(i) == doctest::Approx(std::exp(mid(i) - p.price(i)) / denom).epsilon(1e-14));
  CHECK_THROWS_AS(newsvendor_choice(p, VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("conditional mean profit matches quadrature") {
  NewsvendorProblem p = newsvendor_make(4);
  oracle::Gen g(74);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd alpha(4);
    for (int i = 0; i < 4; ++i) alpha(i) = p.prior_mean(i) + oracle::normal(g);
    VectorXd v = newsvendor_choice(p, alpha);
    VectorXd star = newsvendor_fractile(p);
    double ref = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double order = star(i) * v(i);
      auto integrand = [&](double u) { return p.price(i) * std::min(v(i) * u, order); };
      // Split at the kink so Simpson is exact on each linear piece.
      const double integral = oracle::simpson(integrand, p.a, star(i), 2) + oracle::simpson(integrand, star(i), p.b, 2);
      ref += integral / (p.b - p.a) - p.cost(i) * order;
    }
    CHECK(newsvendor_true_z(p, alpha) == doctest::Approx(ref).epsilon(1e-10));
  }
  VectorXd gone = p.prior_mean;
  gone(2) = -800.0;
  VectorXd v = newsvendor_choice(p, gone);
  CHECK(v(2) == 0.0);
}

TEST_CASE("one-product Monte Carlo agrees with the closed form") {
  NewsvendorProblem p = newsvendor_make(1);
  VectorXd alpha = VectorXd::Constant(1, 5.3);
  VectorXd y = newsvendor_inner_sample(p, alpha, 1000000, 21);
  CHECK(std::abs(sample_mean(y) - newsvendor_true_z(p, alpha)) <= 4.0 * sample_se(y));
}

TEST_CASE("profit bounds") {
  NewsvendorProblem p = newsvendor_make(3);
  VectorXd alpha = p.prior_mean;
  VectorXd v = newsvendor_choice(p, alpha);
  VectorXd order = newsvendor_fractile(p).cwiseProduct(v);
  const double cap = (p.price - p.cost).cwiseProduct(order).sum();
  VectorXd y = newsvendor_inner_sample(p, alpha, 10000, 3);
  CHECK(y.maxCoeff() <= cap + 1e-12);
  VectorXd dead = VectorXd::Constant(3, -100.0);
  VectorXd z = newsvendor_inner_sample(p, dead, 100, 3);
  CHECK(z.cwiseAbs().maxCoeff() < 1e-30);
}

TEST_CASE("prior draws") {
  NewsvendorProblem p = newsvendor_make(3);
  MatrixXd x = newsvendor_outer(p, 100000, 5);
  CHECK(x == newsvendor_outer(p, 100000, 5));
  for (int i = 0; i < 3; ++i) {
    VectorXd col = x.col(i);
    CHECK(std::abs(col.mean() - p.prior_mean(i)) <= 4.0 * sample_se(col));
  }
  NewsvendorProblem fixed = p;
  fixed.prior_sd.setZero();
  MatrixXd y = newsvendor_outer(fixed, 10, 5);
  for (int i = 0; i < 3; ++i) CHECK((y.col(i).array() == p.prior_mean(i)).all());
}

TEST_CASE("critical fractile order beats nearby orders under common random numbers") {
  NewsvendorProblem p = newsvendor_make(2);
  VectorXd alpha = p.prior_mean;
  VectorXd v = newsvendor_choice(p, alpha);
  VectorXd order = newsvendor_fractile(p).cwiseProduct(v);
  Rng rng = derive_stream(8, {1});
  double at = 0.0, lo = 0.0, hi = 0.0;
  VectorXd u(2);
  for (int k = 0; k < 100000; ++k) {
    for (int i = 0; i < 2; ++i) u(i) = p.a + (p.b - p.a) * uniform_open(rng);
    at += newsvendor_profit(p, v, order, u);
    lo += newsvendor_profit(p, v, (0.9 * order).eval(), u);
    hi += newsvendor_profit(p, v, (1.1 * order).eval(), u);
  }
  CHECK(at > lo);
  CHECK(at > hi);
}

TEST_CASE("newsvendor true theta") {
  NewsvendorProblem p = newsvendor_make(2);
  TrueTheta a = newsvendor_true_theta(p, Functional::identity(), 20000, 1);
  TrueTheta b = newsvendor_true_theta(p, Functional::identity(), 20000, 2);
  CHECK(std::abs(a.value - b.value) <= 4.0 * std::hypot(a.std_error, b.std_error));
  CHECK_THROWS_AS(newsvendor_true_theta(p, Functional::identity(), 100, 1), std::invalid_argument);
}
