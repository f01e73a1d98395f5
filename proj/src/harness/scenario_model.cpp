#include "smoothnest/harness/scenario_model.hpp"

#include <cmath>

#include "smoothnest/harness/records.hpp"
#include "smoothnest/problems/newsvendor.hpp"
#include "smoothnest/problems/portfolio.hpp"
#include "smoothnest/problems/test_function.hpp"

namespace smoothnest {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTruthStream = 0x7a74727565ULL;
constexpr long kChunk = 4096;

class TestFunctionModel final : public ScenarioModel {
 public:
  TestFunctionModel(int d, double nu, std::uint64_t seed, double noise_sd)
      : problem_(testfn_make(d, nu, seed)), seed_(seed) {
    problem_.noise_sd = noise_sd;
  }
  std::string name() const override { return "test_function"; }
  int dim() const override { return problem_.dim(); }
  Eigen::MatrixXd outer(long n, Rng& rng) const override { return testfn_outer(problem_, n, rng); }
  double inner_mean(const Eigen::Ref<const Eigen::VectorXd>& x, long m, Rng& rng) const override {
    return testfn_inner_mean(problem_, x, m, rng);
  }
  double true_z(const Eigen::Ref<const Eigen::VectorXd>& x) const override { return problem_.f(x); }
  json to_json() const override {
    return {{"type", "test_function"},
            {"d", problem_.dim()},
            {"nu", problem_.spec.nu()},
            {"seed", seed_},
            {"noise_sd", problem_.noise_sd}};
  }

 private:
  TestFunctionProblem problem_;
  std::uint64_t seed_;
};

class PortfolioModel final : public ScenarioModel {
 public:
  PortfolioModel(int q, std::uint64_t vol_seed, int monitor_start)
      : problem_(portfolio_make(q, vol_seed, monitor_start)), vol_seed_(vol_seed) {}
  std::string name() const override { return "portfolio"; }
  int dim() const override { return problem_.dim(); }
  Eigen::MatrixXd outer(long n, Rng& rng) const override { return gbm_simulate_outer(problem_, n, rng); }
  double inner_mean(const Eigen::Ref<const Eigen::VectorXd>& x, long m, Rng& rng) const override {
    return portfolio_inner_mean(problem_, x, m, rng);
  }
  double true_z(const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    return problem_.v0 - portfolio_price_closed_form(problem_, x);
  }
  json to_json() const override {
    return {{"type", "portfolio"}, {"q", problem_.q}, {"vol_seed", vol_seed_}, {"monitor_start", problem_.monitor_start}};
  }
  double value_scale() const override { return problem_.v0; }

 private:
  PortfolioProblem problem_;
  std::uint64_t vol_seed_;
};

class NewsvendorModel final : public ScenarioModel {
 public:
  NewsvendorModel(int d, double prior_sd) : problem_(newsvendor_make(d)) {
    problem_.prior_sd.setConstant(prior_sd);
    problem_.validate();
  }
  std::string name() const override { return "newsvendor"; }
  int dim() const override { return problem_.dim(); }
  Eigen::MatrixXd outer(long n, Rng& rng) const override { return newsvendor_outer(problem_, n, rng); }
  double inner_mean(const Eigen::Ref<const Eigen::VectorXd>& x, long m, Rng& rng) const override {
    return newsvendor_inner_mean(problem_, x, m, rng);
  }
  double true_z(const Eigen::Ref<const Eigen::VectorXd>& x) const override { return newsvendor_true_z(problem_, x); }
  json to_json() const override {
    return {{"type", "newsvendor"}, {"d", problem_.d}, {"prior_sd", problem_.prior_sd(0)}};
  }

 private:
  NewsvendorProblem problem_;
};

}  // namespace

NestedDataset ScenarioModel::simulate(long n, long m, Rng& rng) const {
  Eigen::MatrixXd x = outer(n, rng);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) y(i) = inner_mean(x.row(i).transpose(), m, rng);
  return NestedDataset(std::move(x), std::move(y), m);
}

Eigen::VectorXd ScenarioModel::sample_z(long n, Rng& rng) const {
  Eigen::VectorXd z(n);
  for (long start = 0; start < n; start += kChunk) {
    const long len = std::min(kChunk, n - start);
    const Eigen::MatrixXd x = outer(len, rng);
    for (long i = 0; i < len; ++i) z(start + i) = true_z(x.row(i).transpose());
  }
  return z;
}

TrueTheta ScenarioModel::true_theta(const Functional& functional, long mc_n, std::uint64_t seed) const {
  if (mc_n < kMinOracleDraws) throw std::invalid_argument("true-theta oracle needs at least 1e4 draws");
  Rng rng = derive_stream(seed, {kTruthStream, static_cast<std::uint64_t>(mc_n)});
  return mc_theta(functional, sample_z(mc_n, rng));
}

std::unique_ptr<ScenarioModel> make_model(const json& record) {
  try {
    const std::string type = record.at("type").get<std::string>();
    if (type == "test_function") {
      return std::make_unique<TestFunctionModel>(record.at("d").get<int>(), record.at("nu").get<double>(),
                                                 record.value("seed", std::uint64_t{1}),
                                                 record.value("noise_sd", std::sqrt(0.1)));
    }
    if (type == "portfolio") {
      return std::make_unique<PortfolioModel>(record.at("q").get<int>(), record.value("vol_seed", std::uint64_t{1}),
                                              record.value("monitor_start", 3));
    }
    if (type == "newsvendor") {
      return std::make_unique<NewsvendorModel>(record.at("d").get<int>(), record.value("prior_sd", 1.0));
    }
    throw ConfigError("unknown problem type '" + type + "' (expected test_function, portfolio, newsvendor)");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed problem record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid problem record: ") + e.what());
  }
}

}  // namespace smoothnest
