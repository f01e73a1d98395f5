#include "smoothnest/harness/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace smoothnest {

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("slope fit needs at least three points");
  const auto n = static_cast<double>(points.size());
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& [budget, metric] : points) {
    if (!(budget > 0.0) || !(metric > 0.0) || !std::isfinite(budget) || !std::isfinite(metric)) {
      throw std::invalid_argument("slope fit needs positive finite budgets and metrics");
    }
    sx += std::log(budget);
    sy += std::log(metric);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [budget, metric] : points) {
    const double dx = std::log(budget) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(metric) - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("slope fit needs at least two distinct budgets");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (const auto& [budget, metric] : points) {
    const double e = std::log(metric) - intercept - slope * std::log(budget);
    rss += e * e;
  }
  const double s2 = rss / (n - 2.0);
  return {slope, intercept, std::sqrt(s2 / sxx), std::sqrt(s2 * (1.0 / n + mx * mx / sxx)), points.size()};
}

ErrorSummary summarize_errors(const std::vector<double>& estimates, double theta_true) {
  if (estimates.empty()) throw std::invalid_argument("no estimates to summarize");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double sum = 0.0;
  for (double e : estimates) {
    const double err = e - theta_true;
    abs_sum += std::abs(err);
    sq_sum += err * err;
    sum += err;
  }
  const auto n = static_cast<double>(estimates.size());
  const double rmse = std::sqrt(sq_sum / n);
  const double rrmse = theta_true != 0.0 ? rmse / std::abs(theta_true) : std::numeric_limits<double>::quiet_NaN();
  return {abs_sum / n, rmse, rrmse, sum / n, estimates.size()};
}

std::pair<double, double> mean_sd(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_sd of an empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace smoothnest
