#include "smoothnest/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include "smoothnest/harness/parallel.hpp"

namespace smoothnest {

using nlohmann::json;

namespace {

constexpr std::uint64_t kCvSeedTag = 0x6376ULL;
constexpr std::uint64_t kPcStream = 0x7063ULL;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

TrueTheta cached_true_theta(const ScenarioModel& model, const Functional& functional, long mc_n,
                            std::uint64_t seed, const std::string& cache_dir) {
  const json key = {{"problem", model.to_json()},
                    {"functional", functional_to_json(functional)},
                    {"mc_n", mc_n},
                    {"seed", seed}};
  const std::string canonical = key.dump();
  std::filesystem::path file;
  if (!cache_dir.empty()) {
    file = std::filesystem::path(cache_dir) / ("theta_" + hex(fnv1a(canonical)) + ".json");
    std::error_code ec;
    if (std::filesystem::exists(file, ec)) {
      try {
        const json cached = read_json_file(file.string());
        if (cached.at("key").dump() == canonical) {
          return {cached.at("value").get<double>(), cached.at("std_error").get<double>(), mc_n};
        }
      } catch (const std::exception&) {
        // Unreadable cache entries are recomputed and overwritten.
      }
    }
  }
  const TrueTheta t = model.true_theta(functional, mc_n, seed);
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    const json record = {{"key", key}, {"value", t.value}, {"std_error", t.std_error}};
    write_text_file(file.string(), record.dump(2) + "\n");
  }
  return t;
}

struct Allocation {
  long n;
  long m;
  std::optional<double> plan_lambda;
};

std::vector<Allocation> allocations_for(const ExperimentConfig& config, long budget, const std::string& estimator,
                                        int dim, const Functional& functional) {
  std::vector<Allocation> out;
  if (!config.m_grid.empty()) {
    for (long m : config.m_grid) {
      const long n = budget / m;
      if (n < 2) throw ConfigError("budget " + std::to_string(budget) + " leaves fewer than 2 scenarios at m = " +
                                   std::to_string(m));
      std::optional<double> lambda;
      if (estimator == "krr" && config.hyper.mode == HyperConfig::Mode::Plan) {
        lambda = plan(budget, dim, *config.hyper.nu, functional, config.margins).lambda;
      }
      out.push_back({n, m, lambda});
    }
    return out;
  }
  if (estimator == "krr") {
    if (!config.hyper.nu) throw ConfigError("automatic KRR allocation needs hyper.nu");
    const AllocationPlan p = plan(budget, dim, *config.hyper.nu, functional, config.margins);
    out.push_back({p.n, p.m, p.lambda});
  } else {
    const AllocationPlan p = plan_standard(budget);
    out.push_back({p.n, p.m, std::nullopt});
  }
  return out;
}

Hyperparams choose_hyper(const ExperimentConfig& config, const Functional& functional, const NestedDataset& data,
                         const Allocation& alloc, std::uint64_t cv_seed) {
  const HyperConfig& h = config.hyper;
  switch (h.mode) {
    case HyperConfig::Mode::Fixed:
      return {*h.lambda, *h.nu, h.ell};
    case HyperConfig::Mode::Plan:
      return {*alloc.plan_lambda, *h.nu, h.ell};
    case HyperConfig::Mode::Cv: {
      const SearchSpace space = h.space ? *h.space : SearchSpace::for_dimension(static_cast<int>(data.dim()));
      return search(functional, data, space, h.evals, cv_seed).best;
    }
  }
  throw std::logic_error("unreachable hyper mode");
}

std::string cell_key(long budget, const std::string& estimator, long m) {
  return std::to_string(budget) + "/" + estimator + "/" + std::to_string(m);
}

void check_budget(long n, long m, long budget) {
  if (n * m > budget) {
    throw std::logic_error("allocation n*m = " + std::to_string(n * m) + " exceeds budget " + std::to_string(budget));
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    c.problem = j.at("problem");
    if (j.contains("functional")) c.functional = j.at("functional");
    c.budgets = j.at("budgets").get<std::vector<long>>();
    if (j.contains("estimators")) c.estimators = j.at("estimators").get<std::vector<std::string>>();
    if (j.contains("allocation")) {
      const json& a = j.at("allocation");
      if (a.is_string()) {
        if (a.get<std::string>() != "auto") throw ConfigError("allocation must be \"auto\" or {\"m\": [...]}");
      } else {
        c.m_grid = a.at("m").get<std::vector<long>>();
        if (c.m_grid.empty()) throw ConfigError("allocation.m must not be empty");
      }
    }
    if (j.contains("hyper")) {
      const json& h = j.at("hyper");
      const std::string mode = get_or<std::string>(h, "mode", "plan");
      if (mode == "fixed") {
        c.hyper.mode = HyperConfig::Mode::Fixed;
      } else if (mode == "plan") {
        c.hyper.mode = HyperConfig::Mode::Plan;
      } else if (mode == "cv") {
        c.hyper.mode = HyperConfig::Mode::Cv;
      } else {
        throw ConfigError("hyper.mode must be fixed, plan or cv");
      }
      if (h.contains("lambda")) c.hyper.lambda = h.at("lambda").get<double>();
      if (h.contains("nu")) c.hyper.nu = h.at("nu").get<double>();
      c.hyper.ell = get_or(h, "ell", 1.0);
      c.hyper.evals = get_or(h, "evals", 40);
      if (h.contains("space")) {
        const json& s = h.at("space");
        SearchSpace space;
        space.log10_lambda_min = get_or(s, "log10_lambda_min", space.log10_lambda_min);
        space.log10_lambda_max = get_or(s, "log10_lambda_max", space.log10_lambda_max);
        space.lambda_grid = get_or(s, "lambda_grid", std::vector<double>{});
        space.nus = s.at("nus").get<std::vector<double>>();
        space.ells = s.at("ells").get<std::vector<double>>();
        space.validate();
        c.hyper.space = std::move(space);
      }
    } else if (j.contains("problem") && j.at("problem").contains("nu")) {
      c.hyper.nu = j.at("problem").at("nu").get<double>();
    }
    if (j.contains("margins")) {
      const json& m = j.at("margins");
      MarginParams mp;
      mp.alpha = get_or(m, "alpha", 1.0);
      mp.beta = get_or(m, "beta", 1.0);
      mp.gamma = get_or(m, "gamma", 1.0);
      mp.validate();
      c.margins = mp;
    }
    c.macro_reps = get_or(j, "macro_reps", c.macro_reps);
    c.seed = get_or(j, "seed", c.seed);
    c.output_dir = get_or<std::string>(j, "output_dir", "");
    c.cache_dir = get_or<std::string>(j, "cache_dir", c.output_dir.empty() ? "" : c.output_dir + "/theta_cache");
    c.true_theta_mc = get_or(j, "true_theta_mc", c.true_theta_mc);
    c.true_theta_seed = get_or(j, "true_theta_seed", c.true_theta_seed);
    c.experiment = get_or<std::string>(j, "experiment", c.experiment);
    c.cri_tau = get_or(j, "cri_tau", c.cri_tau);
    c.pc_draws = get_or(j, "pc_draws", c.pc_draws);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }

  if (c.budgets.empty()) throw ConfigError("budgets must not be empty");
  for (std::size_t i = 0; i < c.budgets.size(); ++i) {
    if (c.budgets[i] < 4) throw ConfigError("budgets must be at least 4");
    if (i > 0 && c.budgets[i] <= c.budgets[i - 1]) throw ConfigError("budgets must be strictly increasing");
  }
  if (c.macro_reps < 1) throw ConfigError("macro_reps must be at least 1");
  if (c.estimators.empty()) throw ConfigError("estimators must not be empty");
  for (const auto& e : c.estimators) {
    if (e != "standard" && e != "krr" && e != "oracle") throw ConfigError("unknown estimator '" + e + "'");
    if (e == "oracle" && c.experiment != "credible_interval") {
      throw ConfigError("the oracle estimator only exists for credible_interval experiments");
    }
  }
  for (long m : c.m_grid) {
    if (m < 1) throw ConfigError("allocation.m entries must be at least 1");
  }
  if (c.experiment != "convergence" && c.experiment != "credible_interval") {
    throw ConfigError("experiment must be convergence or credible_interval");
  }
  if (c.experiment == "credible_interval") {
    if (!(c.cri_tau > 0.0 && c.cri_tau < 1.0)) throw ConfigError("cri_tau must lie in (0, 1)");
    if (c.pc_draws < 1000) throw ConfigError("pc_draws must be at least 1000");
  }
  if (c.true_theta_mc < kMinOracleDraws) throw ConfigError("true_theta_mc must be at least 10000");
  const bool uses_krr = std::find(c.estimators.begin(), c.estimators.end(), "krr") != c.estimators.end();
  if (uses_krr) {
    const auto& h = c.hyper;
    if (h.mode == HyperConfig::Mode::Fixed && (!h.lambda || !h.nu)) {
      throw ConfigError("hyper.mode fixed needs lambda and nu");
    }
    if (h.mode == HyperConfig::Mode::Plan && !h.nu) throw ConfigError("hyper.mode plan needs nu");
    if (h.mode == HyperConfig::Mode::Cv && h.evals < 1) throw ConfigError("hyper.evals must be at least 1");
    if (h.nu && !is_half_integer(*h.nu)) throw ConfigError("hyper.nu must be a positive half-integer");
    if (!(h.ell > 0.0) || !std::isfinite(h.ell)) throw ConfigError("hyper.ell must be positive");
    if (h.lambda && !(*h.lambda > 0.0)) throw ConfigError("hyper.lambda must be positive");
    if (c.m_grid.empty() && !h.nu) throw ConfigError("automatic KRR allocation needs hyper.nu");
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json h = {{"ell", hyper.ell}, {"evals", hyper.evals}};
  h["mode"] = hyper.mode == HyperConfig::Mode::Fixed ? "fixed" : hyper.mode == HyperConfig::Mode::Plan ? "plan" : "cv";
  if (hyper.lambda) h["lambda"] = *hyper.lambda;
  if (hyper.nu) h["nu"] = *hyper.nu;
  if (hyper.space) {
    h["space"] = {{"log10_lambda_min", hyper.space->log10_lambda_min},
                  {"log10_lambda_max", hyper.space->log10_lambda_max},
                  {"lambda_grid", hyper.space->lambda_grid},
                  {"nus", hyper.space->nus},
                  {"ells", hyper.space->ells}};
  }
  json j = {{"problem", problem},
            {"functional", functional},
            {"budgets", budgets},
            {"estimators", estimators},
            {"hyper", h},
            {"macro_reps", macro_reps},
            {"seed", seed},
            {"output_dir", output_dir},
            {"cache_dir", cache_dir},
            {"true_theta_mc", true_theta_mc},
            {"true_theta_seed", true_theta_seed},
            {"experiment", experiment}};
  j["allocation"] = m_grid.empty() ? json("auto") : json({{"m", m_grid}});
  if (margins) j["margins"] = {{"alpha", margins->alpha}, {"beta", margins->beta}, {"gamma", margins->gamma}};
  if (experiment == "credible_interval") {
    j["cri_tau"] = cri_tau;
    j["pc_draws"] = pc_draws;
  }
  return j;
}

Functional resolve_functional(const json& record, const ScenarioModel& model, long mc_n, std::uint64_t seed) {
  if (!record.is_object() || !record.contains("z0") || record.at("z0").is_number()) {
    return functional_from_json(record);
  }
  json resolved = record;
  const json& z0 = record.at("z0");
  if (z0.is_string() && z0.get<std::string>() == "median") {
    resolved["z0"] = model.true_theta(Functional::value_at_risk(0.5), mc_n, seed).value;
  } else if (z0.is_object() && z0.contains("value_fraction")) {
    resolved["z0"] = z0.at("value_fraction").get<double>() * model.value_scale();
  } else {
    throw ConfigError("z0 must be a number, \"median\" or {\"value_fraction\": f}");
  }
  return functional_from_json(resolved);
}

std::vector<CellMetrics> aggregate_rows(const std::vector<RawRow>& rows) {
  struct Group {
    long budget;
    std::string estimator;
    long n;
    long m;
    std::vector<double> estimates;
    double theta_true;
  };
  std::vector<Group> groups;
  for (const auto& r : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.budget == r.budget && g.estimator == r.estimator && g.n == r.n && g.m == r.m;
    });
    if (it == groups.end()) {
      groups.push_back({r.budget, r.estimator, r.n, r.m, {}, r.theta_true});
      it = groups.end() - 1;
    }
    it->estimates.push_back(r.theta_hat);
  }
  std::vector<CellMetrics> cells;
  for (const auto& g : groups) {
    cells.push_back({g.budget, g.estimator, g.n, g.m, summarize_errors(g.estimates, g.theta_true), false});
  }
  for (auto& c : cells) {
    bool best = true;
    for (const auto& o : cells) {
      if (&o == &c || o.budget != c.budget || o.estimator != c.estimator) continue;
      // Earlier cells win ties.
      if (o.errors.rmse < c.errors.rmse || (o.errors.rmse == c.errors.rmse && &o < &c)) best = false;
    }
    c.best_m = best;
  }
  return cells;
}

std::map<std::string, SlopeFit> fit_slopes(const std::vector<CellMetrics>& cells, bool use_rmse) {
  std::map<std::string, std::vector<std::pair<double, double>>> points;
  for (const auto& c : cells) {
    if (!c.best_m) continue;
    points[c.estimator].emplace_back(static_cast<double>(c.budget), use_rmse ? c.errors.rmse : c.errors.mae);
  }
  std::map<std::string, SlopeFit> out;
  for (const auto& [estimator, pts] : points) {
    std::set<double> budgets;
    for (const auto& p : pts) budgets.insert(p.first);
    if (budgets.size() < 3) continue;
    try {
      out.emplace(estimator, fit_slope(pts));
    } catch (const std::invalid_argument&) {
      // A zero error somewhere makes the log fit undefined; leave it out.
    }
  }
  return out;
}

std::string aggregates_csv(const std::vector<CellMetrics>& cells) {
  std::ostringstream out;
  out << "budget,estimator,n,m,reps,mae,rmse,rrmse,bias,best_m\n";
  for (const auto& c : cells) {
    out << c.budget << ',' << c.estimator << ',' << c.n << ',' << c.m << ',' << c.errors.reps << ','
        << format_double(c.errors.mae) << ',' << format_double(c.errors.rmse) << ','
        << format_double(c.errors.rrmse) << ',' << format_double(c.errors.bias) << ',' << (c.best_m ? 1 : 0)
        << '\n';
  }
  return out.str();
}

std::string cri_raw_csv(const std::vector<CriRow>& rows) {
  std::ostringstream out;
  out << "budget,estimator,n,m,lambda,nu,ell,macro_rep,lower,upper,width,pc\n";
  for (const auto& r : rows) {
    out << r.budget << ',' << r.estimator << ',' << r.n << ',' << r.m << ',' << format_double(r.lambda) << ','
        << format_double(r.nu) << ',' << format_double(r.ell) << ',' << r.macro_rep << ','
        << format_double(r.lower) << ',' << format_double(r.upper) << ',' << format_double(r.width) << ','
        << format_double(r.pc) << '\n';
  }
  return out.str();
}

std::string cri_aggregates_csv(const std::vector<CriMetrics>& cells) {
  std::ostringstream out;
  out << "budget,estimator,n,m,reps,mean_pc,sd_pc,mean_width,sd_width\n";
  for (const auto& c : cells) {
    out << c.budget << ',' << c.estimator << ',' << c.n << ',' << c.m << ',' << c.reps << ','
        << format_double(c.mean_pc) << ',' << format_double(c.sd_pc) << ',' << format_double(c.mean_width) << ','
        << format_double(c.sd_width) << '\n';
  }
  return out.str();
}

json slope_to_json(const SlopeFit& fit) {
  return {{"slope", fit.slope},
          {"intercept", fit.intercept},
          {"slope_se", fit.slope_se},
          {"intercept_se", fit.intercept_se},
          {"points", fit.points}};
}

json summary_json(const MetricReport& report, const ExperimentConfig& config) {
  json j = {{"experiment", report.experiment},
            {"config", config.to_json()},
            {"theta_true", report.theta_true},
            {"theta_true_se", report.theta_true_se},
            {"wall_seconds", report.wall_seconds},
            {"cell_seconds", report.cell_seconds}};
  json mae = json::object();
  for (const auto& [k, v] : report.mae_slopes) mae[k] = slope_to_json(v);
  json rmse = json::object();
  for (const auto& [k, v] : report.rmse_slopes) rmse[k] = slope_to_json(v);
  j["mae_slopes"] = mae;
  j["rmse_slopes"] = rmse;
  if (config.macro_reps < 1000) {
    j["note"] = "desk-scale run: " + std::to_string(config.macro_reps) + " macro-replications";
  }
  return j;
}

void write_report(const MetricReport& report, const ExperimentConfig& config, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  if (report.experiment == "credible_interval") {
    write_text_file((base / "cri_raw.csv").string(), cri_raw_csv(report.cri_rows));
    write_text_file((base / "cri_aggregates.csv").string(), cri_aggregates_csv(report.cri_cells));
  } else {
    write_raw_csv((base / "raw.csv").string(), report.rows);
    write_text_file((base / "aggregates.csv").string(), aggregates_csv(report.cells));
  }
  write_text_file((base / "summary.json").string(), summary_json(report, config).dump(2) + "\n");
}

MetricReport run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "credible_interval") return credible_interval_experiment(config);
  const auto start = Clock::now();
  const auto model = make_model(config.problem);
  const Functional functional =
      resolve_functional(config.functional, *model, config.true_theta_mc, config.true_theta_seed);
  const TrueTheta truth =
      cached_true_theta(*model, functional, config.true_theta_mc, config.true_theta_seed, config.cache_dir);

  MetricReport report;
  report.experiment = "convergence";
  report.theta_true = truth.value;
  report.theta_true_se = truth.std_error;

  for (long budget : config.budgets) {
    for (const auto& estimator : config.estimators) {
      for (const Allocation& alloc : allocations_for(config, budget, estimator, model->dim(), functional)) {
        check_budget(alloc.n, alloc.m, budget);
        const auto cell_start = Clock::now();
        const auto reps = static_cast<std::size_t>(config.macro_reps);
        std::vector<RawRow> rows(reps);
        parallel_for(reps, [&](std::size_t rep) {
          const auto r = static_cast<std::uint64_t>(rep);
          Rng rng = derive_stream(config.seed, {static_cast<std::uint64_t>(budget), static_cast<std::uint64_t>(alloc.n),
                                                static_cast<std::uint64_t>(alloc.m), r});
          const NestedDataset data = model->simulate(alloc.n, alloc.m, rng);
          RawRow row{budget, estimator, alloc.n, alloc.m, kNaN, kNaN, kNaN, static_cast<long>(rep), 0.0,
                     truth.value, 0.0};
          if (estimator == "standard") {
            row.theta_hat = estimate_standard(functional, data).theta_hat;
          } else {
            const std::uint64_t cv_seed =
                derive_stream(config.seed, {static_cast<std::uint64_t>(budget), static_cast<std::uint64_t>(alloc.n),
                                            static_cast<std::uint64_t>(alloc.m), r, kCvSeedTag})();
            const Hyperparams xi = choose_hyper(config, functional, data, alloc, cv_seed);
            const KrrModel fitted = fit(KernelSpec(xi.nu, xi.ell), data, xi.lambda);
            row.theta_hat = estimate_krr(functional, fitted, data).theta_hat;
            row.lambda = xi.lambda;
            row.nu = xi.nu;
            row.ell = xi.ell;
          }
          row.abs_err = std::abs(row.theta_hat - row.theta_true);
          rows[rep] = std::move(row);
        });
        report.cell_seconds[cell_key(budget, estimator, alloc.m)] = seconds_since(cell_start);
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
      }
    }
  }
  report.cells = aggregate_rows(report.rows);
  report.mae_slopes = fit_slopes(report.cells, false);
  report.rmse_slopes = fit_slopes(report.cells, true);
  report.wall_seconds = seconds_since(start);
  if (!config.output_dir.empty()) write_report(report, config, config.output_dir);
  return report;
}

MetricReport credible_interval_experiment(const ExperimentConfig& config) {
  const auto start = Clock::now();
  const auto model = make_model(config.problem);
  const double tau = config.cri_tau;
  const Functional lower_q = Functional::value_at_risk(tau / 2.0);
  const Functional upper_q = Functional::value_at_risk(1.0 - tau / 2.0);

  // One shared sample of exact Z draws scores every interval.
  Rng pc_rng = derive_stream(config.true_theta_seed, {kPcStream, static_cast<std::uint64_t>(config.pc_draws)});
  Eigen::VectorXd z = model->sample_z(config.pc_draws, pc_rng);
  std::vector<double> sorted(z.data(), z.data() + z.size());
  std::sort(sorted.begin(), sorted.end());
  auto content = [&sorted](double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    const auto first = std::upper_bound(sorted.begin(), sorted.end(), lo);
    const auto last = std::lower_bound(sorted.begin(), sorted.end(), hi);
    return last > first ? static_cast<double>(last - first) / static_cast<double>(sorted.size()) : 0.0;
  };
  const double oracle_lo = apply(lower_q, z);
  const double oracle_hi = apply(upper_q, z);

  MetricReport report;
  report.experiment = "credible_interval";
  report.theta_true = 1.0 - tau;

  for (long budget : config.budgets) {
    for (const auto& estimator : config.estimators) {
      const std::string alloc_as = estimator == "oracle" ? "standard" : estimator;
      for (const Allocation& alloc : allocations_for(config, budget, alloc_as, model->dim(), upper_q)) {
        check_budget(alloc.n, alloc.m, budget);
        const auto cell_start = Clock::now();
        const auto reps = static_cast<std::size_t>(config.macro_reps);
        std::vector<CriRow> rows(reps);
        parallel_for(reps, [&](std::size_t rep) {
          const auto r = static_cast<std::uint64_t>(rep);
          CriRow row{budget, estimator, alloc.n, alloc.m, kNaN, kNaN, kNaN, static_cast<long>(rep), 0, 0, 0, 0};
          if (estimator == "oracle") {
            row.lower = oracle_lo;
            row.upper = oracle_hi;
          } else {
            Rng rng = derive_stream(config.seed, {static_cast<std::uint64_t>(budget),
                                                  static_cast<std::uint64_t>(alloc.n),
                                                  static_cast<std::uint64_t>(alloc.m), r});
            const NestedDataset data = model->simulate(alloc.n, alloc.m, rng);
            if (estimator == "standard") {
              row.lower = apply(lower_q, data.inner_means());
              row.upper = apply(upper_q, data.inner_means());
            } else {
              const std::uint64_t cv_seed = derive_stream(
                  config.seed, {static_cast<std::uint64_t>(budget), static_cast<std::uint64_t>(alloc.n),
                                static_cast<std::uint64_t>(alloc.m), r, kCvSeedTag})();
              // The single-point LOO criterion does not depend on the VaR level,
              // so one search serves both ends.
              const Hyperparams xi = choose_hyper(config, upper_q, data, alloc, cv_seed);
              const KrrModel fitted = fit(KernelSpec(xi.nu, xi.ell), data, xi.lambda);
              const Eigen::VectorXd f = predict_batch(fitted, data.scenarios());
              row.lower = apply(lower_q, f);
              row.upper = apply(upper_q, f);
              row.lambda = xi.lambda;
              row.nu = xi.nu;
              row.ell = xi.ell;
            }
          }
          row.width = row.upper - row.lower;
          row.pc = content(row.lower, row.upper);
          rows[rep] = row;
        });
        report.cell_seconds[cell_key(budget, estimator, alloc.m)] = seconds_since(cell_start);
        std::vector<double> pcs;
        std::vector<double> widths;
        for (const auto& row : rows) {
          pcs.push_back(row.pc);
          widths.push_back(row.width);
        }
        const auto [mean_pc, sd_pc] = mean_sd(pcs);
        const auto [mean_w, sd_w] = mean_sd(widths);
        report.cri_cells.push_back(
            {budget, estimator, alloc.n, alloc.m, mean_pc, sd_pc, mean_w, sd_w, static_cast<long>(reps)});
        report.cri_rows.insert(report.cri_rows.end(), rows.begin(), rows.end());
      }
    }
  }
  report.wall_seconds = seconds_since(start);
  if (!config.output_dir.empty()) write_report(report, config, config.output_dir);
  return report;
}

}  // namespace smoothnest
