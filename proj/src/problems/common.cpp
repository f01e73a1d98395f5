#include "smoothnest/problems/common.hpp"

#include <cmath>
#include <stdexcept>

namespace smoothnest {

namespace {
constexpr Eigen::Index kBatches = 20;
}

TrueTheta mc_theta(const Functional& functional, const Eigen::VectorXd& z) {
  const Eigen::Index n = z.size();
  if (n < kBatches) throw std::invalid_argument("mc_theta: need at least 20 draws");
  const double value = apply(functional, z);

  double se = 0.0;
  if (functional.is_expectation()) {
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g(i) = functional.eta_value(z(i));
    const double mean = g.mean();
    const double var = (g.array() - mean).square().sum() / static_cast<double>(n - 1);
    se = std::sqrt(var / static_cast<double>(n));
  } else {
    const Eigen::Index len = n / kBatches;
    Eigen::VectorXd est(kBatches);
    for (Eigen::Index b = 0; b < kBatches; ++b) {
      const Eigen::VectorXd batch = z.segment(b * len, len);
      est(b) = apply(functional, batch);
    }
    const double mean = est.mean();
    const double var = (est.array() - mean).square().sum() / static_cast<double>(kBatches - 1);
    se = std::sqrt(var / static_cast<double>(kBatches));
  }
  return {value, se, static_cast<long>(n)};
}

}  // namespace smoothnest
