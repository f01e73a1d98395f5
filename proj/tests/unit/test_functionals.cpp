#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "smoothnest/functionals.hpp"

using namespace smoothnest;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<double> one_to_ten() {
  std::vector<double> v(10);
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

std::vector<double> random_values(oracle::Gen& g, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = oracle::normal(g) * 3.0 + (oracle::uniform(g, 0, 1) < 0.2 ? 10.0 : 0.0);
  return v;
}

// Order-statistic definitions written directly from the sorted sample.
double var_oracle(std::vector<double> v, double tau) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  std::size_t k = 1;
  while (static_cast<double>(k) < tau * static_cast<double>(n) - 1e-9) ++k;
  return v[k - 1];
}

double cvar_oracle(const std::vector<double>& v, double tau) {
  const double q = var_oracle(v, tau);
  double excess = 0.0;
  for (double x : v) excess += std::max(x - q, 0.0);
  return q + excess / ((1.0 - tau) * static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("hand-evaluated examples on 1..10") {
  const auto v = one_to_ten();
  CHECK(smoothnest::apply(Functional::identity(), v) == 5.5);
  CHECK(smoothnest::apply(Functional::value_at_risk(0.5), v) == 5.0);
  CHECK(smoothnest::apply(Functional::conditional_value_at_risk(0.9), v) == 10.0);
  CHECK(smoothnest::apply(Functional::indicator(5.5), v) == 0.5);
  CHECK(smoothnest::apply(Functional::quadratic(), v) == 38.5);
  CHECK(smoothnest::apply(Functional::hockey_stick(7.0), v) == 0.6);
}

TEST_CASE("rank guard handles products that land on an integer") {
  CHECK(quantile_rank(0.95, 100) == 95);
  CHECK(quantile_rank(0.9, 10) == 9);
  CHECK(quantile_rank(0.5, 10) == 5);
  CHECK(quantile_rank(0.51, 10) == 6);
  CHECK(quantile_rank(0.01, 10) == 1);
  CHECK(quantile_rank(0.999, 10) == 10);
  CHECK(quantile_rank(0.95, 1) == 1);
  CHECK(quantile_rank(0.1, 30) == 3);
  CHECK(quantile_rank(0.7, 10) == 7);
}

TEST_CASE("rank guard over a sweep of n and tau") {
  for (std::size_t n = 1; n <= 400; ++n) {
    for (int k = 1; k <= 99; ++k) {
      const double tau = k / 100.0;
      // Exact rank from integer arithmetic: ceil(k n / 100).
      const std::size_t expected = (static_cast<std::size_t>(k) * n + 99) / 100;
      CAPTURE(n);
      CAPTURE(k);
      CHECK(quantile_rank(tau, n) == std::max<std::size_t>(1, expected));
    }
  }
}

TEST_CASE("apply agrees with direct loop oracles") {
  oracle::Gen g(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = oracle::uniform_int(g, 1, 300);
    auto v = random_values(g, n);
    const double z0 = oracle::normal(g) * 2.0;
    const double tau = oracle::uniform(g, 0.01, 0.99);
    double mean = 0.0, sq = 0.0, hs = 0.0, ind = 0.0;
    for (double x : v) {
      mean += x;
      sq += x * x;
      hs += std::max(x - z0, 0.0);
      ind += x >= z0 ? 1.0 : 0.0;
    }
    const double nn = n;
    CHECK(smoothnest::apply(Functional::identity(), v) == doctest::Approx(mean / nn).epsilon(1e-14));
    CHECK(smoothnest::apply(Functional::quadratic(), v) == doctest::Approx(sq / nn).epsilon(1e-14));
    CHECK(smoothnest::apply(Functional::hockey_stick(z0), v) == hs / nn);
    CHECK(smoothnest::apply(Functional::indicator(z0), v) == ind / nn);
    CHECK(smoothnest::apply(Functional::value_at_risk(tau), v) == var_oracle(v, tau));
    CHECK(smoothnest::apply(Functional::conditional_value_at_risk(tau), v) == doctest::Approx(cvar_oracle(v, tau)).epsilon(1e-13));
    auto cube = Functional::smooth([](double z) { return std::tanh(z); }, "tanh");
    double t = 0.0;
    for (double x : v) t += std::tanh(x);
    CHECK(smoothnest::apply(cube, v) == doctest::Approx(t / nn).epsilon(1e-13));
  }
}

TEST_CASE("quantile functionals: monotone in tau, CVaR above VaR, translation equivariant") {
  oracle::Gen g(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = oracle::uniform_int(g, 1, 200);
    auto v = random_values(g, n);
    double prev = -INFINITY;
    for (double tau = 0.02; tau < 0.99; tau += 0.037) {
      const double q = smoothnest::apply(Functional::value_at_risk(tau), v);
      CHECK(q >= prev);
      prev = q;
      CHECK(smoothnest::apply(Functional::conditional_value_at_risk(tau), v) >= q);
    }
    const double c = oracle::normal(g) * 5.0;
    std::vector<double> shifted(v);
    for (double& x : shifted) x += c;
    const double tau = oracle::uniform(g, 0.05, 0.95);
    CHECK(smoothnest::apply(Functional::value_at_risk(tau), shifted) == smoothnest::apply(Functional::value_at_risk(tau), v) + c);
    CHECK(smoothnest::apply(Functional::conditional_value_at_risk(tau), shifted) ==
          doctest::Approx(smoothnest::apply(Functional::conditional_value_at_risk(tau), v) + c).epsilon(1e-12));
    CHECK(smoothnest::apply(Functional::identity(), shifted) == doctest::Approx(smoothnest::apply(Functional::identity(), v) + c).epsilon(1e-12));
  }
}

TEST_CASE("apply is invariant to reordering") {
  oracle::Gen g(43);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = random_values(g, oracle::uniform_int(g, 1, 100));
    auto w = v;
    std::shuffle(w.begin(), w.end(), g);
    const double tau = oracle::uniform(g, 0.05, 0.95);
    for (const Functional& f : {Functional::value_at_risk(tau), Functional::conditional_value_at_risk(tau),
                                Functional::indicator(0.5), Functional::hockey_stick(-1.0)}) {
      CHECK(smoothnest::apply(f, v) == doctest::Approx(smoothnest::apply(f, w)).epsilon(1e-14));
    }
  }
}

TEST_CASE("Eigen and span entry points agree") {
  VectorXd v = VectorXd::LinSpaced(10, 1.0, 10.0);
  CHECK(smoothnest::apply(Functional::value_at_risk(0.5), v) == 5.0);
  CHECK(smoothnest::apply(Functional::conditional_value_at_risk(0.9), v) == 10.0);
}

TEST_CASE("invalid input is rejected") {
  std::vector<double> empty;
  CHECK_THROWS_AS(smoothnest::apply(Functional::identity(), empty), std::invalid_argument);
  std::vector<double> bad{1.0, std::nan("")};
  CHECK_THROWS_AS(smoothnest::apply(Functional::identity(), bad), std::invalid_argument);
  std::vector<double> inf{1.0, INFINITY};
  CHECK_THROWS_AS(smoothnest::apply(Functional::value_at_risk(0.5), inf), std::invalid_argument);
  CHECK_THROWS_AS(Functional::value_at_risk(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Functional::value_at_risk(1.0), std::invalid_argument);
  CHECK_THROWS_AS(Functional::conditional_value_at_risk(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(Functional::conditional_value_at_risk(std::nan("")), std::invalid_argument);
}

TEST_CASE("labels") {
  CHECK(Functional::value_at_risk(0.95).label() == "var(0.95)");
  CHECK(Functional::identity().label() == "identity");
  CHECK(Functional::hockey_stick(12.5).label() == "hockey_stick(12.5)");
}

TEST_CASE("standard estimator") {
  MatrixXd x = MatrixXd::Zero(4, 2);
  VectorXd y(4);
  y << 4.0, 1.0, 3.0, 2.0;
  NestedDataset data(x, y, 7);
  EstimateReport r = estimate_standard(Functional::identity(), data);
  CHECK(r.theta_hat == 2.5);
  CHECK(r.n_used == 4);
  CHECK(r.estimator_kind == EstimatorKind::Standard);

  NestedDataset single(MatrixXd::Zero(1, 2), VectorXd::Constant(1, 7.25), 3);
  CHECK(estimate_standard(Functional::value_at_risk(0.95), single).theta_hat == 7.25);
}

TEST_CASE("KRR estimator limits") {
  oracle::Gen g(44);
  KernelSpec spec(2.5, 1.0);
  MatrixXd x = oracle::uniform_matrix(g, 30, 2, -1.0, 1.0);
  VectorXd center = VectorXd::Constant(2, -0.2);
  VectorXd y(30);
  for (int i = 0; i < 30; ++i) y(i) = 5.0 * eval_kernel(spec, (x.row(i).transpose() - center).eval());
  NestedDataset data(x, y, 1);

  KrrModel interp = fit(spec, data, 1e-12);
  for (const Functional& f : {Functional::identity(), Functional::value_at_risk(0.8),
                              Functional::conditional_value_at_risk(0.7), Functional::quadratic()}) {
    CHECK(estimate_krr(f, interp, data).theta_hat ==
          doctest::Approx(estimate_standard(f, data).theta_hat).epsilon(1e-6));
  }

  KrrModel heavy = fit(spec, data, 1e8);
  CHECK(std::abs(estimate_krr(Functional::identity(), heavy, data).theta_hat) < 1e-6);

  MatrixXd one(1, 2);
  one << 0.1, 0.1;
  NestedDataset tiny(one, VectorXd::Constant(1, 2.0), 1);
  KrrModel m1 = fit(spec, tiny, 1.0);
  EstimateReport r = estimate_krr(Functional::identity(), m1, tiny);
  CHECK(r.theta_hat == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.estimator_kind == EstimatorKind::Krr);
}

TEST_CASE("KRR estimator requires the training scenarios") {
  KernelSpec spec(1.5, 1.0);
  MatrixXd x = MatrixXd::Identity(3, 2);
  NestedDataset data(x, VectorXd::Ones(3), 1);
  KrrModel model = fit(spec, data, 0.1);
  MatrixXd other = x;
  other(0, 0) = 0.5;
  CHECK_THROWS_AS(estimate_krr(Functional::identity(), model, NestedDataset(other, VectorXd::Ones(3), 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_krr(Functional::identity(), model, NestedDataset(MatrixXd::Zero(2, 2), VectorXd::Ones(2), 1)),
                  std::invalid_argument);
}
