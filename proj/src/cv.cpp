#include "smoothnest/cv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "smoothnest/errors.hpp"
#include "smoothnest/kernel.hpp"
#include "smoothnest/rng.hpp"

namespace smoothnest {

namespace {

constexpr std::uint64_t kSearchStream = 0x63765f736561726bULL;
constexpr std::uint64_t kFoldStream = 0x63765f666f6c6473ULL;
constexpr int kRefineRounds = 3;

double g_value(const Functional& functional, double z) {
  return functional.is_expectation() ? functional.eta_value(z) : z;
}

// Pairwise Euclidean distances, shared by every (nu, ell) candidate.
Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  const Eigen::MatrixXd pt = points.transpose();
  const KernelSpec unit(0.5, 1.0);
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    dist(j, j) = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double v = unit.scaled_distance(pt.col(i).data(), pt.col(j).data(), pt.rows());
      dist(i, j) = v;
      dist(j, i) = v;
    }
  }
  return dist;
}

Eigen::MatrixXd gram_from_distances(const KernelSpec& spec, const Eigen::MatrixXd& dist) {
  const Eigen::Index n = dist.rows();
  const double inv_ell = 1.0 / spec.ell();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r(j, j) = 1.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double v = spec.radial(dist(i, j) * inv_ell);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  const auto k = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(v.size()));
  return v[std::min(k, v.size() - 1)];
}

}  // namespace

void Hyperparams::validate() const {
  if (!std::isfinite(lambda) || lambda <= 0.0) throw std::invalid_argument("lambda must be positive and finite");
  if (!std::isfinite(ell) || ell <= 0.0) throw std::invalid_argument("ell must be positive and finite");
  if (!is_half_integer(nu)) throw std::invalid_argument("nu must be a positive half-integer");
}

SearchSpace SearchSpace::for_dimension(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  SearchSpace s;
  for (double nu = 1.5; nu <= 4.0 * d; nu += 1.0) s.nus.push_back(nu);
  for (int k = -3; k <= 3; ++k) s.ells.push_back(std::pow(10.0, k));
  return s;
}

void SearchSpace::validate() const {
  if (nus.empty() || ells.empty()) throw std::invalid_argument("search space has no nu or ell candidates");
  for (double nu : nus) KernelSpec(nu, 1.0);
  for (double ell : ells) {
    if (!std::isfinite(ell) || ell <= 0.0) throw std::invalid_argument("search space ell must be positive");
  }
  if (lambda_grid.empty()) {
    if (!(log10_lambda_min <= log10_lambda_max) || !std::isfinite(log10_lambda_min) ||
        !std::isfinite(log10_lambda_max)) {
      throw std::invalid_argument("search space lambda range is empty");
    }
  } else {
    for (double l : lambda_grid) {
      if (!std::isfinite(l) || l <= 0.0) throw std::invalid_argument("lambda grid entries must be positive");
    }
  }
}

bool SearchSpace::contains(const Hyperparams& xi) const {
  if (std::find(nus.begin(), nus.end(), xi.nu) == nus.end()) return false;
  if (std::find(ells.begin(), ells.end(), xi.ell) == ells.end()) return false;
  if (!lambda_grid.empty()) return std::find(lambda_grid.begin(), lambda_grid.end(), xi.lambda) != lambda_grid.end();
  const double lo = std::pow(10.0, log10_lambda_min);
  const double hi = std::pow(10.0, log10_lambda_max);
  return xi.lambda >= lo && xi.lambda <= hi;
}

std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k-fold needs at least two folds");
  if (n < k) throw std::invalid_argument("more folds than scenarios");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng = derive_stream(seed, {kFoldStream, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)});
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  std::vector<std::vector<Eigen::Index>> folds(static_cast<std::size_t>(k));
  const Eigen::Index base = n / k;
  const Eigen::Index extra = n % k;
  Eigen::Index pos = 0;
  for (Eigen::Index f = 0; f < k; ++f) {
    const Eigen::Index len = base + (f < extra ? 1 : 0);
    folds[static_cast<std::size_t>(f)].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return folds;
}

double cv_score_kfold(const Hyperparams& xi, const Functional& functional, const NestedDataset& data,
                      const std::vector<std::vector<Eigen::Index>>& folds) {
  xi.validate();
  if (folds.size() < 2) throw std::invalid_argument("k-fold needs at least two folds");
  const Eigen::Index n = data.size();
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto& fold : folds) {
    if (fold.empty()) throw std::invalid_argument("k-fold: empty fold");
    for (Eigen::Index i : fold) {
      if (i < 0 || i >= n) throw std::invalid_argument("k-fold: index out of range");
      ++seen[static_cast<std::size_t>(i)];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw std::invalid_argument("k-fold: folds must partition the scenarios");
  }

  const KernelSpec spec(xi.nu, xi.ell);
  double acc = 0.0;
  for (std::size_t l = 0; l < folds.size(); ++l) {
    std::vector<Eigen::Index> train;
    train.reserve(static_cast<std::size_t>(n) - folds[l].size());
    for (std::size_t o = 0; o < folds.size(); ++o) {
      if (o != l) train.insert(train.end(), folds[o].begin(), folds[o].end());
    }
    std::sort(train.begin(), train.end());
    const NestedDataset train_data = data.subset(train);
    const NestedDataset valid_data = data.subset(folds[l]);
    const KrrModel model = fit(spec, train_data, xi.lambda);
    const double theta_krr = apply(functional, predict_batch(model, valid_data.scenarios()));
    const double theta_st = apply(functional, valid_data.inner_means());
    acc += (theta_krr - theta_st) * (theta_krr - theta_st);
  }
  return acc / static_cast<double>(folds.size());
}

double loo_criterion(const Functional& functional, const Eigen::VectorXd& loo, const Eigen::VectorXd& values) {
  if (loo.size() != values.size() || loo.size() == 0) throw std::invalid_argument("loo_criterion: size mismatch");
  double acc = 0.0;
  for (Eigen::Index l = 0; l < loo.size(); ++l) {
    const double gap = g_value(functional, loo(l)) - g_value(functional, values(l));
    acc += gap * gap;
  }
  return acc / static_cast<double>(loo.size());
}

double cv_score_loo(const Hyperparams& xi, const Functional& functional, const NestedDataset& data) {
  xi.validate();
  if (data.size() < 3) throw std::invalid_argument("leave-one-out CV needs at least three scenarios");
  const Eigen::VectorXd loo = loo_predictions(KernelSpec(xi.nu, xi.ell), data, xi.lambda);
  return loo_criterion(functional, loo, data.inner_means());
}

CvResult search(const Functional& functional, const NestedDataset& data, const SearchSpace& space, int budget,
                std::uint64_t seed) {
  space.validate();
  if (budget < 1) throw std::invalid_argument("search budget must be at least 1");
  if (data.size() < 3) throw std::invalid_argument("leave-one-out CV needs at least three scenarios");

  const Eigen::MatrixXd dist = distance_matrix(data.scenarios());
  std::vector<CvTrial> trace;
  Eigen::MatrixXd cached_gram;
  double cached_nu = -1.0;
  double cached_ell = -1.0;

  auto evaluate = [&](const Hyperparams& xi) {
    CvTrial t{xi, std::numeric_limits<double>::infinity(), {}};
    try {
      const KernelSpec spec(xi.nu, xi.ell);
      if (xi.nu != cached_nu || xi.ell != cached_ell) {
        cached_gram = gram_from_distances(spec, dist);
        cached_nu = xi.nu;
        cached_ell = xi.ell;
      }
      const Eigen::VectorXd loo = loo_predictions_from_gram(cached_gram, data.inner_means(), xi.lambda);
      t.score = loo_criterion(functional, loo, data.inner_means());
      if (!std::isfinite(t.score)) {
        t.score = std::numeric_limits<double>::infinity();
        t.error = "non-finite score";
      }
    } catch (const NumericalError& e) {
      t.error = e.what();
    }
    trace.push_back(std::move(t));
  };

  auto incumbent = [&]() -> std::size_t {
    std::size_t best = 0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (trace[i].score < trace[best].score) best = i;
    }
    return best;
  };

  Rng rng = derive_stream(seed, {kSearchStream, static_cast<std::uint64_t>(data.size())});

  if (!space.lambda_grid.empty()) {
    const std::size_t nl = space.lambda_grid.size();
    const std::size_t nn = space.nus.size();
    const std::size_t ne = space.ells.size();
    const std::size_t total = nl * nn * ne;
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto budget_sz = static_cast<std::size_t>(budget);
    if (total > budget_sz) {
      // Partial Fisher-Yates: the first `budget` slots are a uniform sample.
      for (std::size_t i = 0; i < budget_sz; ++i) {
        const auto span = static_cast<double>(total - i);
        const std::size_t j = i + std::min(static_cast<std::size_t>(uniform_open(rng) * span), total - i - 1);
        std::swap(order[i], order[j]);
      }
      order.resize(budget_sz);
    }
    // Index layout keeps (nu, ell) outermost so the Gram cache is reused.
    std::sort(order.begin(), order.end());
    for (std::size_t idx : order) {
      const std::size_t li = idx % nl;
      const std::size_t ei = (idx / nl) % ne;
      const std::size_t ni = idx / (nl * ne);
      evaluate({space.lambda_grid[li], space.nus[ni], space.ells[ei]});
    }
  } else {
    const bool refine = budget >= 10;
    const int draws = refine ? budget - 2 * kRefineRounds : budget;
    const double span = space.log10_lambda_max - space.log10_lambda_min;
    for (int i = 0; i < draws; ++i) {
      const double log_lambda = space.log10_lambda_min + span * uniform_open(rng);
      const double nu = pick(space.nus, rng);
      const double ell = pick(space.ells, rng);
      evaluate({std::pow(10.0, log_lambda), nu, ell});
    }
    if (refine) {
      double h = 0.5;
      for (int round = 0; round < kRefineRounds; ++round, h *= 0.5) {
        const Hyperparams centre = trace[incumbent()].xi;
        const double c = std::log10(centre.lambda);
        for (double step : {-h, h}) {
          const double probe = std::clamp(c + step, space.log10_lambda_min, space.log10_lambda_max);
          evaluate({std::pow(10.0, probe), centre.nu, centre.ell});
        }
      }
    }
  }

  const std::size_t best = incumbent();
  if (!std::isfinite(trace[best].score)) {
    throw SearchFailure("every cross-validation evaluation failed (" + std::to_string(trace.size()) + " trials)",
                        std::move(trace));
  }
  CvResult result{trace[best].xi, trace[best].score, std::move(trace)};
  return result;
}

}  // namespace smoothnest
