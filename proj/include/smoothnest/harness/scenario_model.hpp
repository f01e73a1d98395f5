#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "smoothnest/krr.hpp"
#include "smoothnest/problems/common.hpp"
#include "smoothnest/rng.hpp"

namespace smoothnest {

/// Uniform view of a benchmark problem for the experiment driver.
class ScenarioModel {
 public:
  virtual ~ScenarioModel() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual int dim() const = 0;
  [[nodiscard]] virtual Eigen::MatrixXd outer(long n, Rng& rng) const = 0;
  /// Mean of m inner samples of Y at scenario x.
  [[nodiscard]] virtual double inner_mean(const Eigen::Ref<const Eigen::VectorXd>& x, long m, Rng& rng) const = 0;
  /// Z(x) = E[Y | X = x] without noise.
  [[nodiscard]] virtual double true_z(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
  /// Record that rebuilds an identical model through make_model().
  [[nodiscard]] virtual nlohmann::json to_json() const = 0;
  /// Reference scale for relative thresholds (V0 for the portfolio, else 1).
  [[nodiscard]] virtual double value_scale() const { return 1.0; }

  /// n scenarios, then m inner samples at each, all from `rng`.
  [[nodiscard]] NestedDataset simulate(long n, long m, Rng& rng) const;

  /// n exact draws of Z(X).
  [[nodiscard]] Eigen::VectorXd sample_z(long n, Rng& rng) const;

  [[nodiscard]] TrueTheta true_theta(const Functional& functional, long mc_n, std::uint64_t seed) const;
};

/// {"type": "test_function", "d", "nu", "seed"[, "noise_sd"]}
/// | {"type": "portfolio", "q", "vol_seed"[, "monitor_start"]}
/// | {"type": "newsvendor", "d"[, "prior_sd"]}
/// Throws ConfigError on malformed records.
std::unique_ptr<ScenarioModel> make_model(const nlohmann::json& record);

}  // namespace smoothnest
