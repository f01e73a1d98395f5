#pragma once

#include <vector>

#include <Eigen/Dense>

namespace smoothnest {

/// Matern kernel with half-integer smoothness nu = p + 1/2 and lengthscale ell,
/// normalized so that psi(0) = 1. Evaluated through the elementary closed form
///
///   psi(x) = exp(-sqrt(2p+1) s) * p!/(2p)! * sum_{i=0}^{p} (p+i)!/(i!(p-i)!) * (2 sqrt(2p+1) s)^(p-i)
///
/// with s = |x| / ell. Immutable after construction.
class KernelSpec {
 public:
  static constexpr int kMaxOrder = 60;

  /// Throws std::invalid_argument unless 2*nu is an odd positive integer with
  /// p <= kMaxOrder and ell is positive and finite.
  KernelSpec(double nu, double ell);

  [[nodiscard]] double nu() const { return nu_; }
  [[nodiscard]] double ell() const { return ell_; }
  /// p in nu = p + 1/2.
  [[nodiscard]] int order() const { return order_; }

  /// psi as a function of the scaled radius s = |x| / ell >= 0.
  [[nodiscard]] double radial(double s) const;

  /// |a - b| / ell, accumulated in a fixed order so every entry point that
  /// goes through it produces bit-identical values.
  [[nodiscard]] double scaled_distance(const double* a, const double* b, Eigen::Index dim) const;

  friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
    return a.nu_ == b.nu_ && a.ell_ == b.ell_;
  }

 private:
  double nu_;
  double ell_;
  int order_;
  double root_;                 // sqrt(2p + 1)
  std::vector<double> coeffs_;  // Horner coefficients, highest power first
  double log_coeff_sum_;        // log of the sum of coeffs_
};

/// psi(delta). Throws std::invalid_argument on non-finite input.
double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& delta);

/// Gram matrix R_ij = psi(x_i - x_j) for the rows of `points` (n x d, n >= 1).
/// Exactly symmetric with unit diagonal.
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& points);

/// r(x)_i = psi(x - x_i) over the rows of `points`.
Eigen::VectorXd cross_vector(const KernelSpec& spec,
                             const Eigen::Ref<const Eigen::MatrixXd>& points,
                             const Eigen::Ref<const Eigen::VectorXd>& x);

/// K_ij = psi(xs_i - points_j), a (k x n) matrix.
Eigen::MatrixXd cross_matrix(const KernelSpec& spec,
                             const Eigen::Ref<const Eigen::MatrixXd>& points,
                             const Eigen::Ref<const Eigen::MatrixXd>& xs);

/// True when nu is a supported half-integer smoothness.
bool is_half_integer(double nu);

}  // namespace smoothnest
