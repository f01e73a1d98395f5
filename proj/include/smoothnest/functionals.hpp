#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "smoothnest/krr.hpp"

namespace smoothnest {

namespace eta {
struct Identity {};
/// eta(z) = z^2
struct Quadratic {};
/// User-supplied eta with bounded first and second derivatives.
struct Smooth {
  std::function<double(double)> fn;
  std::string label = "smooth";
};
/// eta(z) = (z - z0)^+
struct HockeyStick {
  double z0;
};
/// eta(z) = 1{z >= z0}
struct Indicator {
  double z0;
};
}  // namespace eta

using Eta = std::variant<eta::Identity, eta::Quadratic, eta::Smooth, eta::HockeyStick, eta::Indicator>;

/// The map T from the distribution of Z = E[Y|X] to theta: an expectation
/// E[eta(Z)], the value-at-risk VaR_tau(Z), or CVaR_tau(Z).
class Functional {
 public:
  enum class Kind { Expectation, ValueAtRisk, ConditionalValueAtRisk };

  static Functional expectation(Eta eta);
  static Functional identity() { return expectation(eta::Identity{}); }
  static Functional quadratic() { return expectation(eta::Quadratic{}); }
  static Functional hockey_stick(double z0) { return expectation(eta::HockeyStick{z0}); }
  static Functional indicator(double z0) { return expectation(eta::Indicator{z0}); }
  static Functional smooth(std::function<double(double)> fn, std::string label = "smooth") {
    return expectation(eta::Smooth{std::move(fn), std::move(label)});
  }
  /// tau must lie strictly inside (0, 1).
  static Functional value_at_risk(double tau);
  static Functional conditional_value_at_risk(double tau);

  [[nodiscard]] Kind kind() const { return kind_; }
  /// Only meaningful for VaR / CVaR.
  [[nodiscard]] double tau() const { return tau_; }
  /// Only meaningful for expectations.
  [[nodiscard]] const Eta& eta() const { return eta_; }

  [[nodiscard]] bool is_expectation() const { return kind_ == Kind::Expectation; }
  [[nodiscard]] bool is_identity() const {
    return is_expectation() && std::holds_alternative<eta::Identity>(eta_);
  }

  /// eta(z); identity for the quantile-type functionals.
  [[nodiscard]] double eta_value(double z) const;

  /// Short human-readable tag, e.g. "var(0.95)" or "hockey_stick(12.5)".
  [[nodiscard]] std::string label() const;

 private:
  Functional(Kind kind, Eta eta, double tau) : kind_(kind), eta_(std::move(eta)), tau_(tau) {}

  Kind kind_;
  Eta eta_;
  double tau_;
};

/// ceil(tau * n) as a 1-based rank in [1, n]; when tau * n is within 1e-9 of
/// an integer k, k is used.
std::size_t quantile_rank(double tau, std::size_t n);

/// T applied to the empirical distribution of `values`:
///   expectation  n^{-1} sum eta(v_i)
///   VaR          v_(k),  k = ceil(tau n)
///   CVaR         v_(k) + ((1 - tau) n)^{-1} sum (v_i - v_(k))^+
/// Throws std::invalid_argument on empty or non-finite input.
double apply(const Functional& functional, std::span<const double> values);
double apply(const Functional& functional, const Eigen::Ref<const Eigen::VectorXd>& values);

enum class EstimatorKind { Standard, Krr };

struct EstimateReport {
  double theta_hat;
  std::size_t n_used;
  Functional functional;
  EstimatorKind estimator_kind;
};

/// Standard nested estimator: T applied to the inner means.
EstimateReport estimate_standard(const Functional& functional, const NestedDataset& data);

/// KRR-driven estimator: T applied to the fitted values at the training
/// scenarios. The model must have been trained on exactly data.scenarios().
EstimateReport estimate_krr(const Functional& functional, const KrrModel& model, const NestedDataset& data);

}  // namespace smoothnest
