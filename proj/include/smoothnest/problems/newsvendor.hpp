#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "smoothnest/problems/common.hpp"
#include "smoothnest/rng.hpp"

namespace smoothnest {

/// d products with multinomial-logit choice probabilities
///   v_i = exp(alpha_i - p_i) / (1 + sum_j exp(alpha_j - p_j))
/// and demand D_i = v_i * U_i, U_i ~ Uniform[a, b]. The order quantity is
/// the critical-fractile solution q_i = F^{-1}((p_i - c_i) / p_i) * v_i.
/// The unknown alpha has prior Normal(prior_mean, prior_sd^2).
struct NewsvendorProblem {
  int d = 0;
  double a = 100.0;
  double b = 500.0;
  Eigen::VectorXd price;       // p_i = 0.2 i + 3
  Eigen::VectorXd cost;        // c_i = 2
  Eigen::VectorXd prior_mean;  // 0.3 i + 5
  Eigen::VectorXd prior_sd;    // 1

  [[nodiscard]] int dim() const { return d; }
  void validate() const;
};

NewsvendorProblem newsvendor_make(int d);

/// Choice probabilities, computed with a log-sum-exp normalization.
Eigen::VectorXd newsvendor_choice(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha);

/// Critical-fractile quantile u_i = a + (b - a)(p_i - c_i) / p_i of U.
Eigen::VectorXd newsvendor_fractile(const NewsvendorProblem& problem);

/// Profit sum_i p_i min(v_i u_i, q_i) - c_i q_i for one draw u of the U_i.
double newsvendor_profit(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& v,
                         const Eigen::Ref<const Eigen::VectorXd>& order, const Eigen::Ref<const Eigen::VectorXd>& u);

/// m profit samples at the optimal order for alpha.
Eigen::VectorXd newsvendor_inner_sample(const NewsvendorProblem& problem,
                                        const Eigen::Ref<const Eigen::VectorXd>& alpha, long m, std::uint64_t seed);

double newsvendor_inner_mean(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha,
                             long m, Rng& rng);

/// n x d matrix of prior draws of alpha.
Eigen::MatrixXd newsvendor_outer(const NewsvendorProblem& problem, long n, Rng& rng);
Eigen::MatrixXd newsvendor_outer(const NewsvendorProblem& problem, long n, std::uint64_t seed);

/// Exact E[Y | alpha] at the optimal order.
double newsvendor_true_z(const NewsvendorProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha);

TrueTheta newsvendor_true_theta(const NewsvendorProblem& problem, const Functional& functional, long mc_n,
                                std::uint64_t seed);

}  // namespace smoothnest
