#include "smoothnest/problems/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace smoothnest {

namespace {

constexpr std::uint64_t kVolStream = 0x766f6c73ULL;
constexpr std::uint64_t kOuterStream = 0x6f75746572ULL;
constexpr std::uint64_t kInnerStream = 0x696e6e6572ULL;
constexpr std::uint64_t kTruthStream = 0x7472757468ULL;
constexpr double kStateTolerance = 1e-12;
// exp() of anything below this is zero in double precision.
constexpr double kExpFloor = -700.0;

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void finish(PortfolioProblem& p) {
  if (p.q < 1) throw std::invalid_argument("portfolio needs at least one asset");
  if (p.euler_steps % p.monitor_count != 0) {
    throw std::invalid_argument("monitoring times must lie on the simulation grid");
  }
  if (p.monitor_start < 0 || p.monitor_start >= p.monitor_count) {
    throw std::invalid_argument("monitor_start must lie in [0, monitor_count)");
  }
  if (p.vol.rows() != p.q || p.vol.cols() != p.q || !p.vol.allFinite()) {
    throw std::invalid_argument("volatility matrix must be a finite q x q matrix");
  }
  for (int i = 0; i < p.q; ++i) {
    for (int j = 0; j < i; ++j) {
      if (p.vol(i, j) != 0.0) throw std::invalid_argument("volatility matrix must be zero below the diagonal");
    }
  }
  p.sigma = p.vol.rowwise().norm();

  // Time-0 value: nothing monitored yet, maximum equal to the spot.
  double v0 = 0.0;
  const double h = p.maturity / p.monitor_count;
  for (int i = 0; i < p.q; ++i) {
    for (double k : p.strikes) {
      v0 += geometric_asian_call(p.s0, 0.0, 0, p.monitor_count, h, p.r, p.sigma(i), k);
      v0 += up_and_out_call(p.s0, p.s0, k, p.barrier, p.r, p.sigma(i), p.maturity);
    }
  }
  p.v0 = v0;
}

}  // namespace

double geometric_asian_call(double spot, double past_log_mean, int past_count, int total_count,
                            double monitor_step, double rate, double sigma, double strike) {
  const int n = total_count - past_count;
  if (n < 1 || past_count < 0) throw std::invalid_argument("geometric Asian: no monitors left");
  const double m = total_count;
  const double nn = n;
  const double discount = std::exp(-rate * nn * monitor_step);
  const double mean_log = (past_count * past_log_mean + nn * std::log(spot) +
                           (rate - 0.5 * sigma * sigma) * monitor_step * nn * (nn + 1.0) / 2.0) /
                          m;
  const double var_log = sigma * sigma * monitor_step * nn * (nn + 1.0) * (2.0 * nn + 1.0) / (6.0 * m * m);
  if (var_log <= 0.0) return discount * std::max(std::exp(mean_log) - strike, 0.0);
  const double sd = std::sqrt(var_log);
  const double d2 = (mean_log - std::log(strike)) / sd;
  const double d1 = d2 + sd;
  return discount * (std::exp(mean_log + 0.5 * var_log) * norm_cdf(d1) - strike * norm_cdf(d2));
}

double up_and_out_call(double spot, double running_max, double strike, double barrier, double rate, double sigma,
                       double tau) {
  if (spot >= barrier || running_max >= barrier || strike >= barrier) return 0.0;
  if (tau <= 0.0) return std::max(spot - strike, 0.0);
  const double discount = std::exp(-rate * tau);
  if (sigma <= 0.0) {
    // Deterministic path; its maximum is the larger endpoint.
    const double terminal = spot * std::exp(rate * tau);
    if (std::max(spot, terminal) >= barrier) return 0.0;
    return discount * std::max(terminal - strike, 0.0);
  }
  const double sst = sigma * std::sqrt(tau);
  const double mu = (rate - 0.5 * sigma * sigma) / (sigma * sigma);
  const double shift = (1.0 + mu) * sst;
  const double x1 = std::log(spot / strike) / sst + shift;
  const double x2 = std::log(spot / barrier) / sst + shift;
  const double y1 = std::log(barrier * barrier / (spot * strike)) / sst + shift;
  const double y2 = std::log(barrier / spot) / sst + shift;
  const double hs = barrier / spot;
  const double up = std::pow(hs, 2.0 * (mu + 1.0));
  const double down = std::pow(hs, 2.0 * mu);
  const double kd = strike * discount;

  const double a = spot * norm_cdf(x1) - kd * norm_cdf(x1 - sst);
  const double b = spot * norm_cdf(x2) - kd * norm_cdf(x2 - sst);
  const double c = spot * up * norm_cdf(-y1) - kd * down * norm_cdf(-y1 + sst);
  const double d = spot * up * norm_cdf(-y2) - kd * down * norm_cdf(-y2 + sst);
  return std::max(a - b + c - d, 0.0);
}

double bridge_crossing_probability(double log_a, double log_b, double log_h, double sigma, double dt) {
  if (log_a >= log_h || log_b >= log_h) return 1.0;
  if (sigma <= 0.0 || dt <= 0.0) return 0.0;
  const double e = -2.0 * (log_h - log_a) * (log_h - log_b) / (sigma * sigma * dt);
  return e < kExpFloor ? 0.0 : std::exp(e);
}

PortfolioProblem portfolio_make(int q, std::uint64_t vol_seed, int monitor_start) {
  if (q < 1) throw std::invalid_argument("portfolio needs at least one asset");
  Rng rng = derive_stream(vol_seed, {kVolStream, static_cast<std::uint64_t>(q)});
  Eigen::MatrixXd vol = Eigen::MatrixXd::Zero(q, q);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q));
  for (int i = 0; i < q; ++i) {
    for (int j = i; j < q; ++j) vol(i, j) = (0.05 + 0.30 * uniform_open(rng)) * scale;
  }
  return portfolio_make(std::move(vol), monitor_start);
}

PortfolioProblem portfolio_make(Eigen::MatrixXd vol, int monitor_start) {
  PortfolioProblem p;
  p.q = static_cast<int>(vol.rows());
  p.vol = std::move(vol);
  p.monitor_start = monitor_start;
  finish(p);
  return p;
}

void check_risk_factors(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int q = problem.q;
  if (x.size() != 3 * q) {
    throw std::invalid_argument("risk-factor vector has length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(3 * q));
  }
  if (!x.allFinite()) throw std::invalid_argument("risk factors must be finite");
  for (int i = 0; i < q; ++i) {
    const double s = x(i);
    const double g = x(q + i);
    const double mx = x(2 * q + i);
    if (s <= 0.0 || g <= 0.0 || mx <= 0.0) throw std::invalid_argument("risk factors must be positive prices");
    if (mx < s * (1.0 - kStateTolerance)) throw std::invalid_argument("running maximum below the current price");
    if (g > mx * (1.0 + kStateTolerance)) throw std::invalid_argument("geometric mean above the running maximum");
  }
}

Eigen::MatrixXd gbm_simulate_outer(const PortfolioProblem& problem, long n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("scenario count must be at least 1");
  const int q = problem.q;
  const double dt = problem.dt();
  const double sqdt = std::sqrt(dt);
  const int steps = problem.outer_steps();
  const int per_monitor = problem.steps_per_monitor();
  const double log_s0 = std::log(problem.s0);
  Eigen::VectorXd drift(q);
  for (int i = 0; i < q; ++i) drift(i) = (problem.mu_real - 0.5 * problem.sigma(i) * problem.sigma(i)) * dt;

  NormalSource normal(rng);
  Eigen::VectorXd z(q);
  Eigen::VectorXd log_s(q);
  Eigen::VectorXd log_max(q);
  Eigen::VectorXd log_sum(q);
  Eigen::MatrixXd out(n, 3 * q);
  for (long p = 0; p < n; ++p) {
    log_s.setConstant(log_s0);
    log_max.setConstant(log_s0);
    log_sum.setZero();
    for (int k = 1; k <= steps; ++k) {
      for (int j = 0; j < q; ++j) z(j) = normal();
      for (int i = 0; i < q; ++i) {
        double shock = 0.0;
        for (int j = i; j < q; ++j) shock += problem.vol(i, j) * z(j);
        const double a = log_s(i);
        const double b = a + drift(i) + sqdt * shock;
        // Maximum of the bridge from a to b, sampled by inverting its law.
        const double spread = b - a;
        const double var = problem.sigma(i) * problem.sigma(i) * dt;
        const double u = uniform_open(rng);
        const double bridge_max = 0.5 * (a + b + std::sqrt(spread * spread - 2.0 * var * std::log(u)));
        log_max(i) = std::max(log_max(i), bridge_max);
        log_s(i) = b;
      }
      if (k % per_monitor == 0) log_sum += log_s;
    }
    for (int i = 0; i < q; ++i) {
      out(p, i) = std::exp(log_s(i));
      out(p, q + i) = problem.monitor_start > 0 ? std::exp(log_sum(i) / problem.monitor_start) : problem.s0;
      out(p, 2 * q + i) = std::max(std::exp(log_max(i)), out(p, i));
    }
  }
  return out;
}

Eigen::MatrixXd gbm_simulate_outer(const PortfolioProblem& problem, long n, std::uint64_t seed) {
  Rng rng = derive_stream(seed, {kOuterStream, static_cast<std::uint64_t>(n)});
  return gbm_simulate_outer(problem, n, rng);
}

double portfolio_payoff_sample(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x,
                               Rng& rng) {
  const int q = problem.q;
  const double dt = problem.dt();
  const double sqdt = std::sqrt(dt);
  const int per_monitor = problem.steps_per_monitor();
  const int steps = problem.euler_steps - problem.outer_steps();
  const double log_h = std::log(problem.barrier);

  NormalSource normal(rng);
  // Small fixed-size scratch; q is at most a few dozen.
  std::vector<double> z(static_cast<std::size_t>(q));
  std::vector<double> log_s(static_cast<std::size_t>(q));
  std::vector<double> log_sum(static_cast<std::size_t>(q));
  std::vector<double> survive(static_cast<std::size_t>(q));
  std::vector<double> drift(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) {
    const auto u = static_cast<std::size_t>(i);
    log_s[u] = std::log(x(i));
    log_sum[u] = problem.monitor_start * std::log(x(q + i));
    survive[u] = (x(2 * q + i) >= problem.barrier || x(i) >= problem.barrier) ? 0.0 : 1.0;
    drift[u] = (problem.r - 0.5 * problem.sigma(i) * problem.sigma(i)) * dt;
  }

  for (int k = 1; k <= steps; ++k) {
    for (auto& v : z) v = normal();
    for (int i = 0; i < q; ++i) {
      const auto u = static_cast<std::size_t>(i);
      double shock = 0.0;
      for (int j = i; j < q; ++j) shock += problem.vol(i, j) * z[static_cast<std::size_t>(j)];
      const double a = log_s[u];
      const double b = a + drift[u] + sqdt * shock;
      if (survive[u] > 0.0) {
        survive[u] *= 1.0 - bridge_crossing_probability(a, b, log_h, problem.sigma(i), dt);
      }
      log_s[u] = b;
    }
    if (k % per_monitor == 0) {
      for (int i = 0; i < q; ++i) log_sum[static_cast<std::size_t>(i)] += log_s[static_cast<std::size_t>(i)];
    }
  }

  double payoff = 0.0;
  for (int i = 0; i < q; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double g = std::exp(log_sum[u] / problem.monitor_count);
    const double st = std::exp(log_s[u]);
    for (double k : problem.strikes) {
      payoff += std::max(g - k, 0.0);
      payoff += survive[u] * std::max(st - k, 0.0);
    }
  }
  return std::exp(-problem.r * (problem.maturity - problem.t0())) * payoff;
}

Eigen::VectorXd portfolio_inner_sample(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x,
                                       long m, std::uint64_t seed) {
  check_risk_factors(problem, x);
  if (m < 1) throw std::invalid_argument("inner sample count must be at least 1");
  Rng rng = derive_stream(seed, {kInnerStream, static_cast<std::uint64_t>(m)});
  Eigen::VectorXd y(m);
  for (long k = 0; k < m; ++k) y(k) = problem.v0 - portfolio_payoff_sample(problem, x, rng);
  return y;
}

double portfolio_inner_mean(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x, long m,
                            Rng& rng) {
  check_risk_factors(problem, x);
  if (m < 1) throw std::invalid_argument("inner sample count must be at least 1");
  double acc = 0.0;
  for (long k = 0; k < m; ++k) acc += portfolio_payoff_sample(problem, x, rng);
  return problem.v0 - acc / static_cast<double>(m);
}

double portfolio_price_closed_form(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_risk_factors(problem, x);
  const int q = problem.q;
  const double h = problem.maturity / problem.monitor_count;
  const double tau = problem.maturity - problem.t0();
  double value = 0.0;
  for (int i = 0; i < q; ++i) {
    const double past = std::log(x(q + i));
    for (double k : problem.strikes) {
      value += geometric_asian_call(x(i), past, problem.monitor_start, problem.monitor_count, h, problem.r,
                                    problem.sigma(i), k);
      value += up_and_out_call(x(i), x(2 * q + i), k, problem.barrier, problem.r, problem.sigma(i), tau);
    }
  }
  return value;
}

TrueTheta portfolio_true_theta(const PortfolioProblem& problem, const Functional& functional, long mc_n,
                               std::uint64_t seed) {
  if (mc_n < kMinOracleDraws) throw std::invalid_argument("true-theta oracle needs at least 1e4 draws");
  Rng rng = derive_stream(seed, {kTruthStream, static_cast<std::uint64_t>(mc_n)});
  constexpr long kChunk = 4096;
  Eigen::VectorXd z(mc_n);
  for (long start = 0; start < mc_n; start += kChunk) {
    const long len = std::min(kChunk, mc_n - start);
    const Eigen::MatrixXd x = gbm_simulate_outer(problem, len, rng);
    for (long i = 0; i < len; ++i) z(start + i) = problem.v0 - portfolio_price_closed_form(problem, x.row(i).transpose());
  }
  return mc_theta(functional, z);
}

}  // namespace smoothnest
