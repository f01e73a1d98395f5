#include "smoothnest/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace smoothnest {

namespace {

enum class Row { Identity, Smooth, HockeyStick, Indicator, Quantile };

Row row_for(const Functional& functional) {
  if (!functional.is_expectation()) return Row::Quantile;
  const Eta& e = functional.eta();
  if (std::holds_alternative<eta::Identity>(e)) return Row::Identity;
  if (std::holds_alternative<eta::HockeyStick>(e)) return Row::HockeyStick;
  if (std::holds_alternative<eta::Indicator>(e)) return Row::Indicator;
  return Row::Smooth;
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

long round_count(double v) { return static_cast<long>(std::llround(v)); }

}  // namespace

void MarginParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("margin alpha must lie in (0, 1]");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("margin beta must lie in (0, 1]");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw std::invalid_argument("margin gamma must be >= 1");
}

RateCertificate rate_certificate(int d, double nu, const Functional& functional, const MarginParams& margins) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  if (!std::isfinite(nu) || nu <= 0.0) {
    throw std::invalid_argument("smoothness must be positive and finite, got " + num(nu));
  }
  margins.validate();
  const double dd = d;
  const double a = margins.alpha;
  const double b = margins.beta;
  const double g = margins.gamma;

  RateCertificate c{};
  c.lambda_exponent = -1.0;
  switch (row_for(functional)) {
    case Row::Identity:
      c = {0.5, 0.0, 1.0, 0.0, -1.0, true, 0.0, "identity: any nu (n ~ G, m ~ 1, lambda ~ 1/G)"};
      break;
    case Row::Smooth:
      c.smoothness_threshold = dd / 2.0;
      c.kappa_tilde = 0.0;
      if (nu >= c.smoothness_threshold) {
        c.high_smoothness = true;
        c.kappa = 0.5;
        c.n_exponent = 1.0;
        c.m_exponent = 0.0;
        c.regime = "smooth: nu >= d/2 (n ~ G, m ~ 1, lambda ~ 1/G)";
      } else {
        const double denom = 2.0 * nu + 3.0 * dd;
        c.high_smoothness = false;
        c.kappa = (2.0 * nu + dd) / denom;
        c.n_exponent = 2.0 * (2.0 * nu + dd) / denom;
        c.m_exponent = (dd - 2.0 * nu) / denom;
        c.lambda_exponent = -2.0 * (2.0 * nu + dd) / denom;
        c.regime = "smooth: nu < d/2 (n ~ G^{2(2nu+d)/(2nu+3d)}, m ~ G^{(d-2nu)/(2nu+3d)})";
      }
      break;
    case Row::HockeyStick:
      c.smoothness_threshold = dd / (a + 1.0);
      if (nu >= c.smoothness_threshold) {
        c.high_smoothness = true;
        c.kappa = std::min(0.5, nu * (a + 1.0) / (2.0 * (nu + dd)));
        c.kappa_tilde = nu * a < dd ? (a + 1.0) / 2.0 : 0.0;
        c.n_exponent = 1.0;
        c.m_exponent = 0.0;
        c.regime = "hockey-stick: nu >= d/(alpha+1) (n ~ G, m ~ 1)";
      } else {
        c.high_smoothness = false;
        c.kappa = (a + 1.0) / (2.0 * (a + 2.0));
        c.kappa_tilde = (a + 1.0) / 2.0;
        c.n_exponent = (a + 1.0) / (a + 2.0);
        c.m_exponent = 1.0 / (a + 2.0);
        c.regime = "hockey-stick: nu < d/(alpha+1) (n ~ G^{(alpha+1)/(alpha+2)}, m ~ G^{1/(alpha+2)})";
      }
      break;
    case Row::Indicator:
      c.smoothness_threshold = dd / a;
      c.kappa_tilde = a / 2.0;
      if (nu >= c.smoothness_threshold) {
        c.high_smoothness = true;
        c.kappa = nu * a / (2.0 * (nu + dd));
        c.n_exponent = 1.0;
        c.m_exponent = 0.0;
        c.regime = "indicator: nu >= d/alpha (n ~ G, m ~ 1)";
      } else {
        c.high_smoothness = false;
        c.kappa = a / (2.0 * (a + 1.0));
        c.n_exponent = a / (a + 1.0);
        c.m_exponent = 1.0 / (a + 1.0);
        c.regime = "indicator: nu < d/alpha (n ~ G^{alpha/(alpha+1)}, m ~ G^{1/(alpha+1)})";
      }
      break;
    case Row::Quantile:
      c.smoothness_threshold = dd / b;
      c.kappa_tilde = b / (2.0 * g);
      if (nu >= c.smoothness_threshold) {
        c.high_smoothness = true;
        c.kappa = nu * b / (2.0 * g * (nu + dd));
        c.n_exponent = 1.0;
        c.m_exponent = 0.0;
        c.regime = "var/cvar: nu >= d/beta (n ~ G, m ~ 1)";
      } else {
        c.high_smoothness = false;
        c.kappa = b / (2.0 * g * (b + 1.0));
        c.n_exponent = b / (b + 1.0);
        c.m_exponent = 1.0 / (b + 1.0);
        c.regime = "var/cvar: nu < d/beta (n ~ G^{beta/(beta+1)}, m ~ G^{1/(beta+1)})";
      }
      break;
  }
  return c;
}

AllocationPlan plan(long gamma_budget, int d, double nu, const Functional& functional,
                    std::optional<MarginParams> margins) {
  if (gamma_budget < 4) {
    throw std::invalid_argument("budget " + std::to_string(gamma_budget) + " is too small for n >= 2 (need >= 4)");
  }
  const bool defaulted = !margins.has_value();
  const MarginParams used = margins.value_or(MarginParams{});
  const RateCertificate c = rate_certificate(d, nu, functional, used);

  const auto budget = static_cast<double>(gamma_budget);
  const long n = std::max(2L, round_count(std::pow(budget, c.n_exponent)));
  const long m = std::max(1L, gamma_budget / n);

  AllocationPlan p;
  p.n = n;
  p.m = m;
  p.lambda = std::pow(budget, c.lambda_exponent);
  p.kappa = c.kappa;
  p.kappa_tilde = c.kappa_tilde;
  p.n_exponent = c.n_exponent;
  p.m_exponent = c.m_exponent;
  p.regime = c.regime;
  p.margins_defaulted = defaulted;
  if (defaulted) p.regime += " [default margins alpha=beta=gamma=1]";
  return p;
}

AllocationPlan plan_standard(long gamma_budget) {
  if (gamma_budget < 8) {
    throw std::invalid_argument("standard allocation needs a budget of at least 8, got " +
                                std::to_string(gamma_budget));
  }
  const double root = std::cbrt(static_cast<double>(gamma_budget));
  const long n = std::max(2L, round_count(root * root));
  AllocationPlan p;
  p.n = n;
  p.m = std::max(1L, gamma_budget / n);
  p.lambda = std::nullopt;
  p.kappa = 1.0 / 3.0;
  p.kappa_tilde = 0.0;
  p.n_exponent = 2.0 / 3.0;
  p.m_exponent = 1.0 / 3.0;
  p.regime = "standard: n ~ G^{2/3}, m ~ G^{1/3} (no regularization)";
  return p;
}

ThresholdTable threshold_table(int d, const MarginParams& margins) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  margins.validate();
  using K = Threshold::Kind;
  const double dd = d;
  const double a = margins.alpha;
  ThresholdTable t{};

  t.smooth = {{K::AnyPositive}, {K::AtLeast, dd / 2.0}};

  if (a == 1.0) {
    t.hockey_stick = {{K::AnyPositive}, {K::AtLeast, dd}};
    t.indicator = {{K::AtLeast, 2.0 * dd}, {K::Infinite}};
  } else {
    t.hockey_stick = {{K::AtLeast, 2.0 * dd / (3.0 * a + 1.0)}, {K::AtLeast, dd / a}};
    if (a > 2.0 / 3.0) {
      t.indicator = {{K::AtLeast, 2.0 * dd / (3.0 * a - 2.0)}, {K::Unattainable}};
    } else {
      t.indicator = {{K::Unattainable}, {K::Unattainable}};
    }
  }

  const double ratio = margins.beta / margins.gamma;
  if (ratio == 1.0) {
    t.quantile = {{K::AtLeast, 2.0 * dd}, {K::Infinite}};
  } else if (ratio > 2.0 / 3.0) {
    t.quantile = {{K::AtLeast, 2.0 * dd / (3.0 * ratio - 2.0)}, {K::Unattainable}};
  } else {
    t.quantile = {{K::Unattainable}, {K::Unattainable}};
  }
  return t;
}

std::string describe(const Threshold& threshold) {
  switch (threshold.kind) {
    case Threshold::Kind::AnyPositive:
      return "nu > 0";
    case Threshold::Kind::AtLeast:
      return "nu >= " + num(threshold.value);
    case Threshold::Kind::Infinite:
      return "nu -> infinity";
    case Threshold::Kind::Unattainable:
      return "n.a.";
  }
  return "";
}

}  // namespace smoothnest
