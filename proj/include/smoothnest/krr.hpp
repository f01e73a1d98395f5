#pragma once

#include <Eigen/Dense>

#include "smoothnest/kernel.hpp"

namespace smoothnest {

/// Outer scenarios x_1..x_n (rows of an n x d matrix) with the inner-sample
/// means ybar_i, each averaged over the same m inner samples.
class NestedDataset {
 public:
  NestedDataset(Eigen::MatrixXd scenarios, Eigen::VectorXd inner_means, long inner_count);

  [[nodiscard]] const Eigen::MatrixXd& scenarios() const { return scenarios_; }
  [[nodiscard]] const Eigen::VectorXd& inner_means() const { return inner_means_; }
  [[nodiscard]] long inner_count() const { return inner_count_; }
  [[nodiscard]] Eigen::Index size() const { return scenarios_.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return scenarios_.cols(); }

  /// Rows selected by `index`, in that order.
  [[nodiscard]] NestedDataset subset(const std::vector<Eigen::Index>& index) const;

 private:
  Eigen::MatrixXd scenarios_;
  Eigen::VectorXd inner_means_;
  long inner_count_;
};

/// Fitted estimator f(x) = r(x)' (R + n lambda I)^{-1} ybar.
class KrrModel {
 public:
  KrrModel(KernelSpec spec, double lambda, Eigen::MatrixXd train_points, Eigen::VectorXd weights,
           double jitter = 0.0);

  [[nodiscard]] const KernelSpec& spec() const { return spec_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] const Eigen::MatrixXd& train_points() const { return train_points_; }
  [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }
  /// Extra diagonal added on top of n*lambda during fitting (0 unless the
  /// factorization needed rescuing).
  [[nodiscard]] double jitter() const { return jitter_; }

 private:
  KernelSpec spec_;
  double lambda_;
  Eigen::MatrixXd train_points_;
  Eigen::VectorXd weights_;
  double jitter_;
};

/// Cholesky factor of R + shift*I with the diagonal shift actually used.
struct ShiftedCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double shift = 0.0;   // n*lambda + jitter
  double jitter = 0.0;
};

/// Factor R + n*lambda*I. On failure retries with additive jitter
/// 1e-12 n, 1e-10 n, 1e-8 n, then throws NumericalError listing the levels.
ShiftedCholesky factor_shifted(const Eigen::MatrixXd& gram_matrix, double n_lambda);

KrrModel fit(const KernelSpec& spec, const NestedDataset& data, double lambda);

/// Same as fit() on raw arrays; used where a dataset view would be a copy.
KrrModel fit(const KernelSpec& spec, const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
             double lambda);

double predict(const KrrModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// predict() for each row of xs; the cross-kernel matrix is built in row
/// blocks to bound memory.
Eigen::VectorXd predict_batch(const KrrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& xs);

/// Leave-one-out predictions f^{-l}(x_l) from the hat matrix
/// H = R (R + n lambda I)^{-1}:
///   f^{-l}(x_l) = [(H ybar)_l - H_ll ybar_l] / (1 - H_ll).
/// Throws DegenerateLeverage when some 1 - H_ll < 1e-12.
Eigen::VectorXd loo_predictions(const KernelSpec& spec, const NestedDataset& data, double lambda);

/// loo_predictions() given a precomputed Gram matrix of the scenarios.
Eigen::VectorXd loo_predictions_from_gram(const Eigen::MatrixXd& gram_matrix, const Eigen::VectorXd& values,
                                          double lambda);

}  // namespace smoothnest
