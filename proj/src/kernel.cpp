#include "smoothnest/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace smoothnest {

namespace {

// Above this value of sqrt(2p+1)*s the polynomial factor can overflow before
// the exponential factor underflows, so the product is formed in log space.
constexpr double kLogSpaceThreshold = 600.0;
// exp() of anything below this is zero in double precision.
constexpr double kLogUnderflow = -746.0;

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + " contains non-finite values");
  }
}

}  // namespace

bool is_half_integer(double nu) {
  if (!std::isfinite(nu) || nu <= 0.0) return false;
  const double twice = 2.0 * nu;
  if (twice != std::floor(twice)) return false;
  return std::fmod(twice, 2.0) == 1.0;
}

KernelSpec::KernelSpec(double nu, double ell) : nu_(nu), ell_(ell) {
  if (!is_half_integer(nu)) {
    throw std::invalid_argument("Matern smoothness must be a positive half-integer p + 1/2, got " +
                                std::to_string(nu));
  }
  if (!std::isfinite(ell) || ell <= 0.0) {
    throw std::invalid_argument("lengthscale must be positive and finite, got " + std::to_string(ell));
  }
  order_ = static_cast<int>(nu - 0.5);
  if (order_ > kMaxOrder) {
    throw std::invalid_argument("Matern order p = " + std::to_string(order_) + " exceeds the supported maximum " +
                                std::to_string(kMaxOrder));
  }
  root_ = std::sqrt(2.0 * order_ + 1.0);

  // a_i = p!/(2p)! * (p+i)!/(i!(p-i)!) = [prod_{k=p-i+1}^{p} k] / [i! * prod_{k=p+i+1}^{2p} k]
  const int p = order_;
  coeffs_.resize(static_cast<std::size_t>(p) + 1);
  for (int i = 0; i <= p; ++i) {
    long double num = 1.0L;
    for (int k = p - i + 1; k <= p; ++k) num *= k;
    long double den = 1.0L;
    for (int k = 2; k <= i; ++k) den *= k;
    for (int k = p + i + 1; k <= 2 * p; ++k) den *= k;
    coeffs_[static_cast<std::size_t>(i)] = static_cast<double>(num / den);
  }
  double sum = 0.0;
  for (double c : coeffs_) sum += c;
  log_coeff_sum_ = std::log(sum);
}

double KernelSpec::radial(double s) const {
  if (s == 0.0) return 1.0;
  const double u = root_ * s;
  const double t = 2.0 * u;
  if (u < kLogSpaceThreshold) {
    double poly = coeffs_[0];
    for (std::size_t i = 1; i < coeffs_.size(); ++i) poly = poly * t + coeffs_[i];
    return std::exp(-u) * poly;
  }
  const double log_t = std::log(t);
  // With t >= 1 the polynomial is at most sum(coeffs) * t^p; once that bound
  // underflows against exp(-u) the value is exactly zero.
  if (-u + log_coeff_sum_ + order_ * log_t < kLogUnderflow) return 0.0;
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    max_term = std::max(max_term, std::log(coeffs_[i]) + static_cast<double>(order_ - static_cast<int>(i)) * log_t);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    acc += std::exp(std::log(coeffs_[i]) + static_cast<double>(order_ - static_cast<int>(i)) * log_t - max_term);
  }
  return std::exp(-u + max_term + std::log(acc));
}

double KernelSpec::scaled_distance(const double* a, const double* b, Eigen::Index dim) const {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double z = (a[k] - b[k]) / ell_;
    acc += z * z;
  }
  return std::sqrt(acc);
}

double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& delta) {
  require_finite(delta, "kernel argument");
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(delta.size());
  return spec.radial(spec.scaled_distance(delta.data(), zero.data(), delta.size()));
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw std::invalid_argument("gram: need at least one point");
  require_finite(points, "gram points");
  // Columns of `cols` are the points, so each one is contiguous.
  const Eigen::MatrixXd cols = points.transpose();
  const Eigen::Index d = cols.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = spec.radial(spec.scaled_distance(cols.col(i).data(), cols.col(j).data(), d));
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

Eigen::VectorXd cross_vector(const KernelSpec& spec,
                             const Eigen::Ref<const Eigen::MatrixXd>& points,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != points.cols()) {
    throw std::invalid_argument("cross_vector: point has dimension " + std::to_string(x.size()) +
                                ", training points have " + std::to_string(points.cols()));
  }
  require_finite(x, "query point");
  const Eigen::MatrixXd cols = points.transpose();
  const Eigen::VectorXd query = x;
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out(i) = spec.radial(spec.scaled_distance(query.data(), cols.col(i).data(), query.size()));
  }
  return out;
}

Eigen::MatrixXd cross_matrix(const KernelSpec& spec,
                             const Eigen::Ref<const Eigen::MatrixXd>& points,
                             const Eigen::Ref<const Eigen::MatrixXd>& xs) {
  if (xs.rows() > 0 && xs.cols() != points.cols()) {
    throw std::invalid_argument("cross_matrix: query dimension " + std::to_string(xs.cols()) +
                                " does not match training dimension " + std::to_string(points.cols()));
  }
  require_finite(xs, "query points");
  const Eigen::MatrixXd cols = points.transpose();
  const Eigen::MatrixXd queries = xs.transpose();
  const Eigen::Index d = cols.rows();
  Eigen::MatrixXd out(xs.rows(), points.rows());
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      out(i, j) = spec.radial(spec.scaled_distance(queries.col(i).data(), cols.col(j).data(), d));
    }
  }
  return out;
}

}  // namespace smoothnest
