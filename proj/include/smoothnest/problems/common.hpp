#pragma once

#include <Eigen/Dense>

#include "smoothnest/functionals.hpp"
#include "smoothnest/krr.hpp"

namespace smoothnest {

/// Monte Carlo estimate of theta = T(Z) from exact draws of Z.
struct TrueTheta {
  double value;
  double std_error;
  long mc_n;
};

/// Smallest sample accepted by the true-theta oracles.
inline constexpr long kMinOracleDraws = 10000;

/// T applied to `z` with a standard error: the classical one for
/// expectations, batch means over 20 batches for VaR / CVaR.
TrueTheta mc_theta(const Functional& functional, const Eigen::VectorXd& z);

/// Dataset together with the noiseless conditional means at its scenarios.
struct SimulatedData {
  NestedDataset data;
  Eigen::VectorXd true_values;
};

}  // namespace smoothnest
