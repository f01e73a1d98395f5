#pragma once

#include <optional>
#include <string>

#include "smoothnest/functionals.hpp"

namespace smoothnest {

/// Margin exponents of the distribution of f(X) near thresholds:
///   P(|f(X) - z0| <= t) <= C t^alpha                       (alpha in (0, 1])
///   C2 t^gamma <= P(|f(X) - z| <= t) <= C1 t^beta          (0 < beta <= 1 <= gamma)
struct MarginParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;

  /// Throws std::invalid_argument when outside the ranges above.
  void validate() const;
};

/// Convergence exponents |theta_hat - theta| = O_P(Gamma^-kappa (log Gamma)^kappa_tilde)
/// together with the budget exponents n ~ Gamma^n_exponent, m ~ Gamma^m_exponent,
/// lambda ~ Gamma^lambda_exponent that achieve them.
struct RateCertificate {
  double kappa;
  double kappa_tilde;
  double n_exponent;
  double m_exponent;
  double lambda_exponent;
  bool high_smoothness;  // the "nu >= threshold" row applies
  double smoothness_threshold;
  std::string regime;
};

struct AllocationPlan {
  long n;
  long m;
  /// Absent for the standard estimator, which has no regularization.
  std::optional<double> lambda;
  double kappa;
  double kappa_tilde;
  double n_exponent;
  double m_exponent;
  std::string regime;
  bool margins_defaulted = false;
};

/// Exponents for (d, nu, T, margins) from the rate table. The table is defined
/// for every real nu > 0, so nu is not restricted to the half-integers here.
RateCertificate rate_certificate(int d, double nu, const Functional& functional, const MarginParams& margins);

/// Budget split for the KRR-driven estimator. Proportionality constants are 1:
/// n = max(2, round(Gamma^n_exponent)), m = max(1, floor(Gamma / n)),
/// lambda = Gamma^lambda_exponent. Missing margins default to alpha = beta = gamma = 1.
AllocationPlan plan(long gamma_budget, int d, double nu, const Functional& functional,
                    std::optional<MarginParams> margins = std::nullopt);

/// n = round(Gamma^{2/3}), m = floor(Gamma / n), kappa = 1/3.
AllocationPlan plan_standard(long gamma_budget);

/// Smallest nu that achieves a rate, as listed in the smoothness-threshold table.
struct Threshold {
  enum class Kind { AnyPositive, AtLeast, Infinite, Unattainable };
  Kind kind;
  double value = 0.0;  // only for AtLeast

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct ThresholdRow {
  Threshold cubic;        // kappa >= 1/3
  Threshold square_root;  // kappa = 1/2
};

struct ThresholdTable {
  ThresholdRow smooth;
  ThresholdRow hockey_stick;
  ThresholdRow indicator;
  ThresholdRow quantile;  // VaR and CVaR
};

ThresholdTable threshold_table(int d, const MarginParams& margins);

std::string describe(const Threshold& threshold);

}  // namespace smoothnest
