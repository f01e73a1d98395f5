#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace smoothnest {

/// log(metric) = intercept + slope * log(budget), by ordinary least squares.
struct SlopeFit {
  double slope;
  double intercept;
  double slope_se;      // 0 when the fit is exact or has 2 points
  double intercept_se;
  std::size_t points;
};

/// Needs at least 3 points with positive budgets and metrics; throws
/// std::invalid_argument otherwise.
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points);

struct ErrorSummary {
  double mae;
  double rmse;
  double rrmse;  // rmse / |theta_true|; NaN when theta_true == 0
  double bias;
  std::size_t reps;
};

ErrorSummary summarize_errors(const std::vector<double>& estimates, double theta_true);

/// Sample mean and standard deviation (n - 1 denominator; 0 for one value).
std::pair<double, double> mean_sd(const std::vector<double>& values);

}  // namespace smoothnest
