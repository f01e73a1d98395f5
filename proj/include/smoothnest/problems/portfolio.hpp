#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "smoothnest/problems/common.hpp"
#include "smoothnest/rng.hpp"

namespace smoothnest {

/// q assets following a GBM driven by q independent Brownian motions,
///   dS_i / S_i = drift dt + sum_{j >= i} vol(i, j) dW_j,
/// with a portfolio of, per asset and per strike K in {90, 100, 110}, one
/// geometric Asian call on the M = 50 monitored prices and one up-and-out
/// call with barrier H = 150, both maturing at T = 1.
///
/// The risk factors at T0 = monitor_start * T / M form a 3q-vector
///   [S_1..S_q(T0), G_1..G_q, max_1..max_q]
/// where G_i is the geometric mean of the monitored prices up to T0 (S0 when
/// monitor_start = 0) and max_i the running maximum over [0, T0].
struct PortfolioProblem {
  int q = 0;
  double s0 = 100.0;
  double mu_real = 0.08;
  double r = 0.05;
  double maturity = 1.0;
  std::vector<double> strikes{90.0, 100.0, 110.0};
  double barrier = 150.0;
  int monitor_count = 50;
  int monitor_start = 3;
  int euler_steps = 200;
  Eigen::MatrixXd vol;    // q x q, zero below the diagonal
  Eigen::VectorXd sigma;  // sigma_i = |vol row i|
  double v0 = 0.0;        // portfolio value at time 0

  [[nodiscard]] int dim() const { return 3 * q; }
  [[nodiscard]] double t0() const { return maturity * monitor_start / monitor_count; }
  [[nodiscard]] double dt() const { return maturity / euler_steps; }
  [[nodiscard]] int steps_per_monitor() const { return euler_steps / monitor_count; }
  [[nodiscard]] int outer_steps() const { return monitor_start * steps_per_monitor(); }
};

/// vol(i, j) ~ Uniform(0.05, 0.35) / sqrt(q) for i <= j, drawn from vol_seed.
PortfolioProblem portfolio_make(int q, std::uint64_t vol_seed, int monitor_start = 3);

/// Given volatility matrix; entries below the diagonal must be zero.
PortfolioProblem portfolio_make(Eigen::MatrixXd vol, int monitor_start = 3);

/// Throws std::invalid_argument when x is not a consistent risk-factor state.
void check_risk_factors(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Outer paths on [0, T0] under drift mu_real with exact log increments;
/// running maxima sampled exactly from the Brownian bridge of each step.
Eigen::MatrixXd gbm_simulate_outer(const PortfolioProblem& problem, long n, Rng& rng);
Eigen::MatrixXd gbm_simulate_outer(const PortfolioProblem& problem, long n, std::uint64_t seed);

/// One discounted payoff W from the state x, simulated on [T0, T] under
/// drift r. Barrier legs are weighted by the Brownian-bridge survival
/// probability of every step (zero once any grid price or the carried
/// maximum reaches H).
double portfolio_payoff_sample(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x,
                               Rng& rng);

/// m samples of Y = V0 - W.
Eigen::VectorXd portfolio_inner_sample(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x,
                                       long m, std::uint64_t seed);

double portfolio_inner_mean(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x, long m,
                            Rng& rng);

/// V_{T0}(x): closed-form sum of the 6q option values.
double portfolio_price_closed_form(const PortfolioProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Monte Carlo of T(V0 - V_{T0}(X)) with the closed-form pricer.
TrueTheta portfolio_true_theta(const PortfolioProblem& problem, const Functional& functional, long mc_n,
                               std::uint64_t seed);

/// Geometric Asian call on total_count equally spaced monitors, of which
/// past_count are already fixed with mean log price past_log_mean. The
/// remaining monitors lie at spot-time + k * monitor_step, k = 1..N.
double geometric_asian_call(double spot, double past_log_mean, int past_count, int total_count,
                            double monitor_step, double rate, double sigma, double strike);

/// Continuously monitored up-and-out call with time tau left; zero once
/// the spot or the carried running maximum reaches the barrier.
double up_and_out_call(double spot, double running_max, double strike, double barrier, double rate, double sigma,
                       double tau);

/// Probability that a Brownian bridge in log price between log_a and log_b
/// over time dt with volatility sigma touches log_h. 1 if either endpoint
/// is at or above the barrier.
double bridge_crossing_probability(double log_a, double log_b, double log_h, double sigma, double dt);

}  // namespace smoothnest
