#include "smoothnest/problems/newsvendor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace smoothnest {

namespace {

constexpr std::uint64_t kOuterStream = 0x6e766f75746572ULL;
constexpr std::uint64_t kInnerStream = 0x6e76696e6e6572ULL;
constexpr std::uint64_t kTruthStream = 0x6e767472757468ULL;

void require_alpha(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  if (alpha.size() != problem.d) {
    throw std::invalid_argument("alpha has length " + std::to_string(alpha.size()) + ", expected " +
                                std::to_string(problem.d));
  }
  if (!alpha.allFinite()) throw std::invalid_argument("alpha must be finite");
}

}  // namespace

void NewsvendorProblem::validate() const {
  if (d < 1) throw std::invalid_argument("newsvendor needs at least one product");
  if (!(b > a && a > 0.0)) throw std::invalid_argument("newsvendor demand range needs b > a > 0");
  if (price.size() != d || cost.size() != d || prior_mean.size() != d || prior_sd.size() != d) {
    throw std::invalid_argument("newsvendor parameter vectors must have length d");
  }
  for (int i = 0; i < d; ++i) {
    if (!(price(i) > cost(i))) throw std::invalid_argument("newsvendor price must exceed cost");
    if (!(prior_sd(i) >= 0.0)) throw std::invalid_argument("newsvendor prior sd must be nonnegative");
  }
}

NewsvendorProblem newsvendor_make(int d) {
  NewsvendorProblem p;
  p.d = d;
  if (d < 1) throw std::invalid_argument("newsvendor needs at least one product");
  p.price.resize(d);
  p.cost.resize(d);
  p.prior_mean.resize(d);
  p.prior_sd.resize(d);
  for (int i = 0; i < d; ++i) {
    const double k = i + 1;
    p.price(i) = 0.2 * k + 3.0;
    p.cost(i) = 2.0;
    p.prior_mean(i) = 0.3 * k + 5.0;
    p.prior_sd(i) = 1.0;
  }
  p.validate();
  return p;
}

Eigen::VectorXd newsvendor_choice(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  require_alpha(problem, alpha);
  const Eigen::VectorXd util = alpha - problem.price;
  // The outside option contributes utility 0.
  const double top = std::max(0.0, util.maxCoeff());
  double denom = std::exp(-top);
  for (int i = 0; i < problem.d; ++i) denom += std::exp(util(i) - top);
  Eigen::VectorXd v(problem.d);
  for (int i = 0; i < problem.d; ++i) v(i) = std::exp(util(i) - top) / denom;
  return v;
}

Eigen::VectorXd newsvendor_fractile(const NewsvendorProblem& problem) {
  Eigen::VectorXd u(problem.d);
  for (int i = 0; i < problem.d; ++i) {
    u(i) = problem.a + (problem.b - problem.a) * (problem.price(i) - problem.cost(i)) / problem.price(i);
  }
  return u;
}

double newsvendor_profit(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& v,
                         const Eigen::Ref<const Eigen::VectorXd>& order, const Eigen::Ref<const Eigen::VectorXd>& u) {
  double profit = 0.0;
  for (int i = 0; i < problem.d; ++i) {
    profit += problem.price(i) * std::min(v(i) * u(i), order(i)) - problem.cost(i) * order(i);
  }
  return profit;
}

double newsvendor_inner_mean(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha,
                             long m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("inner sample count must be at least 1");
  const Eigen::VectorXd v = newsvendor_choice(problem, alpha);
  const Eigen::VectorXd order = newsvendor_fractile(problem).cwiseProduct(v);
  Eigen::VectorXd u(problem.d);
  double acc = 0.0;
  for (long k = 0; k < m; ++k) {
    for (int i = 0; i < problem.d; ++i) u(i) = problem.a + (problem.b - problem.a) * uniform_open(rng);
    acc += newsvendor_profit(problem, v, order, u);
  }
  return acc / static_cast<double>(m);
}

Eigen::VectorXd newsvendor_inner_sample(const NewsvendorProblem& problem,
                                        const Eigen::Ref<const Eigen::VectorXd>& alpha, long m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("inner sample count must be at least 1");
  const Eigen::VectorXd v = newsvendor_choice(problem, alpha);
  const Eigen::VectorXd order = newsvendor_fractile(problem).cwiseProduct(v);
  Rng rng = derive_stream(seed, {kInnerStream, static_cast<std::uint64_t>(m)});
  Eigen::VectorXd u(problem.d);
  Eigen::VectorXd y(m);
  for (long k = 0; k < m; ++k) {
    for (int i = 0; i < problem.d; ++i) u(i) = problem.a + (problem.b - problem.a) * uniform_open(rng);
    y(k) = newsvendor_profit(problem, v, order, u);
  }
  return y;
}

Eigen::MatrixXd newsvendor_outer(const NewsvendorProblem& problem, long n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("scenario count must be at least 1");
  Eigen::MatrixXd x(n, problem.d);
  for (long k = 0; k < n; ++k) {
    for (int i = 0; i < problem.d; ++i) x(k, i) = problem.prior_mean(i) + problem.prior_sd(i) * standard_normal(rng);
  }
  return x;
}

Eigen::MatrixXd newsvendor_outer(const NewsvendorProblem& problem, long n, std::uint64_t seed) {
  Rng rng = derive_stream(seed, {kOuterStream, static_cast<std::uint64_t>(n)});
  return newsvendor_outer(problem, n, rng);
}

double newsvendor_true_z(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  const Eigen::VectorXd v = newsvendor_choice(problem, alpha);
  const Eigen::VectorXd star = newsvendor_fractile(problem);
  const double a = problem.a;
  const double b = problem.b;
  double z = 0.0;
  for (int i = 0; i < problem.d; ++i) {
    const double s = star(i);
    // E[min(U, s)] for U ~ Uniform[a, b], a <= s <= b.
    const double e_min = (0.5 * (s * s - a * a) + (b - s) * s) / (b - a);
    z += v(i) * (problem.price(i) * e_min - problem.cost(i) * s);
  }
  return z;
}

TrueTheta newsvendor_true_theta(const NewsvendorProblem& problem, const Functional& functional, long mc_n,
                                std::uint64_t seed) {
  if (mc_n < kMinOracleDraws) throw std::invalid_argument("true-theta oracle needs at least 1e4 draws");
  Rng rng = derive_stream(seed, {kTruthStream, static_cast<std::uint64_t>(mc_n)});
  Eigen::VectorXd z(mc_n);
  Eigen::VectorXd alpha(problem.d);
  for (long k = 0; k < mc_n; ++k) {
    for (int i = 0; i < problem.d; ++i) alpha(i) = problem.prior_mean(i) + problem.prior_sd(i) * standard_normal(rng);
    z(k) = newsvendor_true_z(problem, alpha);
  }
  return mc_theta(functional, z);
}

}  // namespace smoothnest
