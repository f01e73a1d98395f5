#include "smoothnest/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace smoothnest {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_level(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("risk level tau must lie in (0, 1), got " + std::to_string(tau));
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Functional Functional::expectation(Eta eta) {
  if (const auto* s = std::get_if<eta::Smooth>(&eta); s != nullptr && !s->fn) {
    throw std::invalid_argument("smooth eta needs a callable");
  }
  return Functional(Kind::Expectation, std::move(eta), 0.0);
}

Functional Functional::value_at_risk(double tau) {
  require_level(tau);
  return Functional(Kind::ValueAtRisk, eta::Identity{}, tau);
}

Functional Functional::conditional_value_at_risk(double tau) {
  require_level(tau);
  return Functional(Kind::ConditionalValueAtRisk, eta::Identity{}, tau);
}

double Functional::eta_value(double z) const {
  if (kind_ != Kind::Expectation) return z;
  return std::visit(Overloaded{
                        [z](const eta::Identity&) { return z; },
                        [z](const eta::Quadratic&) { return z * z; },
                        [z](const eta::Smooth& s) { return s.fn(z); },
                        [z](const eta::HockeyStick& h) { return std::max(z - h.z0, 0.0); },
                        [z](const eta::Indicator& ind) { return z >= ind.z0 ? 1.0 : 0.0; },
                    },
                    eta_);
}

std::string Functional::label() const {
  switch (kind_) {
    case Kind::ValueAtRisk:
      return "var(" + format_number(tau_) + ")";
    case Kind::ConditionalValueAtRisk:
      return "cvar(" + format_number(tau_) + ")";
    case Kind::Expectation:
      break;
  }
  return std::visit(Overloaded{
                        [](const eta::Identity&) { return std::string("identity"); },
                        [](const eta::Quadratic&) { return std::string("quadratic"); },
                        [](const eta::Smooth& s) { return s.label; },
                        [](const eta::HockeyStick& h) { return "hockey_stick(" + format_number(h.z0) + ")"; },
                        [](const eta::Indicator& ind) { return "indicator(" + format_number(ind.z0) + ")"; },
                    },
                    eta_);
}

std::size_t quantile_rank(double tau, std::size_t n) {
  if (n == 0) throw std::invalid_argument("quantile_rank: empty sample");
  const double target = tau * static_cast<double>(n);
  const double nearest = std::round(target);
  double k = std::abs(target - nearest) <= 1e-9 ? nearest : std::ceil(target);
  k = std::clamp(k, 1.0, static_cast<double>(n));
  return static_cast<std::size_t>(k);
}

double apply(const Functional& functional, std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("functional applied to an empty sample");
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("functional applied to non-finite values");
  }
  const auto n = static_cast<double>(values.size());

  if (functional.is_expectation()) {
    double acc = 0.0;
    for (double v : values) acc += functional.eta_value(v);
    return acc / n;
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::stable_sort(sorted.begin(), sorted.end());
  const double var = sorted[quantile_rank(functional.tau(), sorted.size()) - 1];
  if (functional.kind() == Functional::Kind::ValueAtRisk) return var;

  double excess = 0.0;
  for (double v : values) excess += std::max(v - var, 0.0);
  return var + excess / ((1.0 - functional.tau()) * n);
}

double apply(const Functional& functional, const Eigen::Ref<const Eigen::VectorXd>& values) {
  return apply(functional, std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

EstimateReport estimate_standard(const Functional& functional, const NestedDataset& data) {
  return {apply(functional, data.inner_means()), static_cast<std::size_t>(data.size()), functional,
          EstimatorKind::Standard};
}

EstimateReport estimate_krr(const Functional& functional, const KrrModel& model, const NestedDataset& data) {
  const auto& train = model.train_points();
  if (train.rows() != data.size() || train.cols() != data.dim() || train != data.scenarios()) {
    throw std::invalid_argument("estimate_krr: model was not trained on this dataset's scenarios");
  }
  const Eigen::VectorXd fitted = predict_batch(model, data.scenarios());
  return {apply(functional, fitted), static_cast<std::size_t>(data.size()), functional, EstimatorKind::Krr};
}

}  // namespace smoothnest
