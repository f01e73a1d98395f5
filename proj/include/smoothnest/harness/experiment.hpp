#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothnest/allocation.hpp"
#include "smoothnest/cv.hpp"
#include "smoothnest/functionals.hpp"
#include "smoothnest/harness/metrics.hpp"
#include "smoothnest/harness/records.hpp"
#include "smoothnest/harness/scenario_model.hpp"

namespace smoothnest {

/// How the KRR estimator gets Xi = (lambda, nu, ell).
struct HyperConfig {
  enum class Mode { Fixed, Plan, Cv };
  Mode mode = Mode::Plan;
  std::optional<double> lambda;  // Fixed only
  std::optional<double> nu;      // Fixed, Plan; in Cv mode only used by auto allocation
  double ell = 1.0;
  int evals = 40;  // Cv only
  std::optional<SearchSpace> space;  // Cv only; default SearchSpace::for_dimension(d)
};

/// Parsed and validated experiment configuration. See docs/config.md.
struct ExperimentConfig {
  nlohmann::json problem;
  /// Functional record; z0 may be "median" (median of Z) or
  /// {"value_fraction": f} (f times the problem's value scale).
  nlohmann::json functional = {{"kind", "expectation"}, {"eta", "identity"}};
  std::vector<long> budgets;
  std::vector<std::string> estimators{"standard", "krr"};
  /// Empty: allocation from plan / plan_standard. Otherwise n = floor(budget / m) per listed m.
  std::vector<long> m_grid;
  HyperConfig hyper;
  std::optional<MarginParams> margins;
  long macro_reps = 100;
  std::uint64_t seed = 1;
  std::string output_dir;
  std::string cache_dir;  // default <output_dir>/theta_cache; empty output_dir disables caching
  long true_theta_mc = 1000000;
  std::uint64_t true_theta_seed = 20240601;
  /// "convergence" or "credible_interval".
  std::string experiment = "convergence";
  double cri_tau = 0.1;
  long pc_draws = 100000;

  /// Throws ConfigError on anything missing or out of range.
  static ExperimentConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
};

struct CellMetrics {
  long budget;
  std::string estimator;
  long n;
  long m;
  ErrorSummary errors;
  bool best_m;  // lowest RMSE among the m values tried for (budget, estimator)
};

struct CriRow {
  long budget;
  std::string estimator;
  long n;
  long m;
  double lambda;
  double nu;
  double ell;
  long macro_rep;
  double lower;
  double upper;
  double width;
  double pc;
};

struct CriMetrics {
  long budget;
  std::string estimator;
  long n;
  long m;
  double mean_pc;
  double sd_pc;
  double mean_width;
  double sd_width;
  long reps;
};

struct MetricReport {
  std::string experiment;
  double theta_true = 0.0;
  double theta_true_se = 0.0;
  std::vector<RawRow> rows;
  std::vector<CellMetrics> cells;
  std::map<std::string, SlopeFit> mae_slopes;   // per estimator, best-m cells, >= 3 budgets
  std::map<std::string, SlopeFit> rmse_slopes;
  std::vector<CriRow> cri_rows;
  std::vector<CriMetrics> cri_cells;
  std::map<std::string, double> cell_seconds;  // "budget/estimator/m" -> wall-clock
  double wall_seconds = 0.0;
};

/// Resolves placeholder thresholds in the functional record.
Functional resolve_functional(const nlohmann::json& record, const ScenarioModel& model, long mc_n,
                              std::uint64_t seed);

/// Runs every (budget, estimator, allocation) cell for macro_reps
/// replications. Dispatches to credible_interval_experiment when
/// config.experiment says so. Writes files when output_dir is set.
MetricReport run_experiment(const ExperimentConfig& config);

/// Interval [VaR_{tau/2}, VaR_{1-tau/2}] per replication, scored by its
/// probability content under a shared sample of exact Z draws.
/// Estimators: standard, krr, and oracle (true quantiles of that sample).
MetricReport credible_interval_experiment(const ExperimentConfig& config);

/// Aggregates raw rows by (budget, estimator, n, m) in order of appearance.
std::vector<CellMetrics> aggregate_rows(const std::vector<RawRow>& rows);

/// Slope fits per estimator over the best-m cells. Estimators with fewer
/// than three budgets are skipped.
std::map<std::string, SlopeFit> fit_slopes(const std::vector<CellMetrics>& cells, bool use_rmse);

/// Deterministic CSV of the aggregate table (no timings).
std::string aggregates_csv(const std::vector<CellMetrics>& cells);
std::string cri_raw_csv(const std::vector<CriRow>& rows);
std::string cri_aggregates_csv(const std::vector<CriMetrics>& cells);
nlohmann::json slope_to_json(const SlopeFit& fit);
nlohmann::json summary_json(const MetricReport& report, const ExperimentConfig& config);

/// raw.csv, aggregates.csv, summary.json (and cri_*.csv) under dir.
void write_report(const MetricReport& report, const ExperimentConfig& config, const std::string& dir);

}  // namespace smoothnest
