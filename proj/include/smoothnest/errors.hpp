#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace smoothnest {

// Invalid inputs are reported with std::invalid_argument throughout the
// library. The types below cover failures that happen on valid input.

/// A dense solve or factorization could not be completed.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::vector<double> jitter_levels = {})
      : std::runtime_error(what), jitter_levels_(std::move(jitter_levels)) {}

  /// Additive diagonal jitter values that were tried before giving up.
  [[nodiscard]] const std::vector<double>& jitter_levels() const { return jitter_levels_; }

 private:
  std::vector<double> jitter_levels_;
};

/// Leave-one-out formula is undefined because a hat-matrix diagonal is 1.
class DegenerateLeverage : public NumericalError {
 public:
  DegenerateLeverage(std::size_t index, double leverage);

  [[nodiscard]] std::size_t index() const { return index_; }
  [[nodiscard]] double leverage() const { return leverage_; }

 private:
  std::size_t index_;
  double leverage_;
};

}  // namespace smoothnest
