#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smoothnest/functionals.hpp"
#include "smoothnest/krr.hpp"

namespace smoothnest {

/// Xi = (lambda, nu, ell).
struct Hyperparams {
  double lambda;
  double nu;
  double ell;

  /// Throws std::invalid_argument unless lambda, ell > 0 finite and nu is a
  /// supported half-integer.
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct CvTrial {
  Hyperparams xi;
  double score;       // +inf when the evaluation failed
  std::string error;  // empty on success
};

struct CvResult {
  Hyperparams best;
  double score;
  std::vector<CvTrial> trace;  // in evaluation-index order
};

/// Candidate set for the search. lambda is either continuous on
/// [10^log10_lambda_min, 10^log10_lambda_max] or, when lambda_grid is
/// non-empty, restricted to that grid.
struct SearchSpace {
  double log10_lambda_min = -8.0;
  double log10_lambda_max = -1.0;
  std::vector<double> lambda_grid;
  std::vector<double> nus;
  std::vector<double> ells;

  /// nu over the half-integers in (1/2, 4d], ell in {1e-3, ..., 1e3},
  /// continuous log10 lambda in [-8, -1].
  static SearchSpace for_dimension(int d);

  void validate() const;
  [[nodiscard]] bool contains(const Hyperparams& xi) const;
};

class SearchFailure : public std::runtime_error {
 public:
  SearchFailure(const std::string& what, std::vector<CvTrial> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}

  [[nodiscard]] const std::vector<CvTrial>& trace() const { return trace_; }

 private:
  std::vector<CvTrial> trace_;
};

/// Partition of 0..n-1 into k contiguous blocks of a seeded shuffle. Block
/// sizes differ by at most one.
std::vector<std::vector<Eigen::Index>> make_folds(Eigen::Index n, int k, std::uint64_t seed);

/// (1/K) sum_l (theta_hat on fold l from a fit on the other folds
///              - standard estimate on fold l)^2
double cv_score_kfold(const Hyperparams& xi, const Functional& functional, const NestedDataset& data,
                      const std::vector<std::vector<Eigen::Index>>& folds);

/// (1/n) sum_l (g(f^{-l}(x_l)) - g(ybar_l))^2 with g = eta for expectations
/// and g = identity for VaR / CVaR (a one-point sample is its own quantile).
/// Needs n >= 3.
double cv_score_loo(const Hyperparams& xi, const Functional& functional, const NestedDataset& data);

/// Same criterion from precomputed LOO predictions.
double loo_criterion(const Functional& functional, const Eigen::VectorXd& loo, const Eigen::VectorXd& values);

/// Seeded search minimizing cv_score_loo over `space`.
///
/// Continuous lambda: budget - 6 random draws (all of the budget when it is
/// below 10), then three rounds of probing log10 lambda +- h around the
/// incumbent with h = 0.5, 0.25, 0.125 decades, (nu, ell) held fixed.
/// Grid lambda: the full product when it fits in the budget, otherwise a
/// seeded sample without replacement.
///
/// Ties keep the earliest trial. Throws SearchFailure if every trial failed.
CvResult search(const Functional& functional, const NestedDataset& data, const SearchSpace& space, int budget,
                std::uint64_t seed);

}  // namespace smoothnest
