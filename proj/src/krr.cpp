#include "smoothnest/krr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "smoothnest/errors.hpp"

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace smoothnest {

namespace {

constexpr Eigen::Index kPredictBlock = 512;
constexpr double kLeverageTolerance = 1e-12;

void require_positive_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda <= 0.0) {
    throw std::invalid_argument("regularization lambda must be positive and finite, got " +
                                std::to_string(lambda));
  }
}

void require_matching(const Eigen::MatrixXd& points, const Eigen::VectorXd& values) {
  if (points.rows() != values.size()) {
    throw std::invalid_argument("scenario count " + std::to_string(points.rows()) +
                                " does not match value count " + std::to_string(values.size()));
  }
  if (points.rows() < 1) throw std::invalid_argument("need at least one scenario");
  if (!values.allFinite()) throw std::invalid_argument("inner means must be finite");
}

// Far-apart scenarios give kernel entries near the underflow limit, and the
// factorization then runs on subnormal numbers, an order of magnitude slower.
// Inside the dense linear algebra such values are flushed to zero.
class FlushSubnormals {
#if defined(__SSE2__)
 public:
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }
  FlushSubnormals(const FlushSubnormals&) = delete;
  FlushSubnormals& operator=(const FlushSubnormals&) = delete;

 private:
  unsigned saved_;
#endif
};

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  return diag.allFinite() && (diag.array() > 0.0).all();
}

}  // namespace

NestedDataset::NestedDataset(Eigen::MatrixXd scenarios, Eigen::VectorXd inner_means, long inner_count)
    : scenarios_(std::move(scenarios)), inner_means_(std::move(inner_means)), inner_count_(inner_count) {
  require_matching(scenarios_, inner_means_);
  if (!scenarios_.allFinite()) throw std::invalid_argument("scenarios must be finite");
  if (inner_count_ < 1) throw std::invalid_argument("inner sample count must be at least 1");
}

NestedDataset NestedDataset::subset(const std::vector<Eigen::Index>& index) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(index.size()), dim());
  Eigen::VectorXd y(static_cast<Eigen::Index>(index.size()));
  for (std::size_t k = 0; k < index.size(); ++k) {
    const Eigen::Index i = index[k];
    if (i < 0 || i >= size()) throw std::invalid_argument("subset index out of range");
    x.row(static_cast<Eigen::Index>(k)) = scenarios_.row(i);
    y(static_cast<Eigen::Index>(k)) = inner_means_(i);
  }
  return NestedDataset(std::move(x), std::move(y), inner_count_);
}

KrrModel::KrrModel(KernelSpec spec, double lambda, Eigen::MatrixXd train_points, Eigen::VectorXd weights,
                   double jitter)
    : spec_(std::move(spec)),
      lambda_(lambda),
      train_points_(std::move(train_points)),
      weights_(std::move(weights)),
      jitter_(jitter) {
  require_positive_lambda(lambda_);
  if (train_points_.rows() != weights_.size()) {
    throw std::invalid_argument("model has " + std::to_string(train_points_.rows()) + " points but " +
                                std::to_string(weights_.size()) + " weights");
  }
}

ShiftedCholesky factor_shifted(const Eigen::MatrixXd& gram_matrix, double n_lambda) {
  const auto n = static_cast<double>(gram_matrix.rows());
  const double levels[] = {0.0, 1e-12 * n, 1e-10 * n, 1e-8 * n};
  const FlushSubnormals flush;
  ShiftedCholesky out;
  for (double jitter : levels) {
    const double shift = n_lambda + jitter;
    out.llt.compute(gram_matrix + shift * Eigen::MatrixXd::Identity(gram_matrix.rows(), gram_matrix.cols()));
    if (factor_ok(out.llt)) {
      out.shift = shift;
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError("Cholesky factorization of R + n*lambda*I failed after jitter escalation",
                       {levels[1], levels[2], levels[3]});
}

KrrModel fit(const KernelSpec& spec, const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
             double lambda) {
  require_positive_lambda(lambda);
  require_matching(points, values);
  const Eigen::MatrixXd r = gram(spec, points);
  const FlushSubnormals flush;
  const auto fac = factor_shifted(r, static_cast<double>(points.rows()) * lambda);
  Eigen::VectorXd weights = fac.llt.solve(values);
  // One step of iterative refinement against the shifted system.
  const Eigen::VectorXd residual = values - (r * weights + fac.shift * weights);
  weights += fac.llt.solve(residual);
  if (!weights.allFinite()) {
    throw NumericalError("KRR solve produced non-finite weights", {fac.jitter});
  }
  return KrrModel(spec, lambda, points, std::move(weights), fac.jitter);
}

KrrModel fit(const KernelSpec& spec, const NestedDataset& data, double lambda) {
  return fit(spec, data.scenarios(), data.inner_means(), lambda);
}

double predict(const KrrModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return cross_vector(model.spec(), model.train_points(), x).dot(model.weights());
}

Eigen::VectorXd predict_batch(const KrrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& xs) {
  Eigen::VectorXd out(xs.rows());
  if (xs.rows() == 0) return out;
  if (xs.cols() != model.train_points().cols()) {
    throw std::invalid_argument("predict_batch: query dimension " + std::to_string(xs.cols()) +
                                " does not match training dimension " +
                                std::to_string(model.train_points().cols()));
  }
  for (Eigen::Index start = 0; start < xs.rows(); start += kPredictBlock) {
    const Eigen::Index len = std::min(kPredictBlock, xs.rows() - start);
    const Eigen::MatrixXd k = cross_matrix(model.spec(), model.train_points(), xs.middleRows(start, len));
    out.segment(start, len).noalias() = k * model.weights();
  }
  return out;
}

Eigen::VectorXd loo_predictions_from_gram(const Eigen::MatrixXd& gram_matrix, const Eigen::VectorXd& values,
                                          double lambda) {
  require_positive_lambda(lambda);
  const Eigen::Index n = gram_matrix.rows();
  if (n < 2) throw std::invalid_argument("leave-one-out needs at least two scenarios");
  if (values.size() != n) throw std::invalid_argument("value count does not match Gram size");
  if (!values.allFinite()) throw std::invalid_argument("inner means must be finite");

  const FlushSubnormals flush;
  const auto fac = factor_shifted(gram_matrix, static_cast<double>(n) * lambda);
  const Eigen::VectorXd alpha = fac.llt.solve(values);

  // diag(A^{-1}) with A = L L': column norms of L^{-1}.
  // L^{-1} is lower triangular, so each column block only needs the
  // trailing part of L. About a third of the work of a dense solve.
  const Eigen::MatrixXd& lower = fac.llt.matrixLLT();
  Eigen::VectorXd a_inv_diag(n);
  constexpr Eigen::Index kBlock = 64;
  for (Eigen::Index j = 0; j < n; j += kBlock) {
    const Eigen::Index w = std::min(kBlock, n - j);
    const Eigen::Index rest = n - j;
    Eigen::MatrixXd block = Eigen::MatrixXd::Identity(rest, w);
    lower.bottomRightCorner(rest, rest).triangularView<Eigen::Lower>().solveInPlace(block);
    a_inv_diag.segment(j, w) = block.colwise().squaredNorm().transpose();
  }

  // H = R A^{-1} = I - shift A^{-1}, so (H y)_l = y_l - shift alpha_l and
  // 1 - H_ll = shift (A^{-1})_ll. Substituting into the LOO formula, the
  // shift cancels: f^{-l}(x_l) = y_l - alpha_l / (A^{-1})_ll.
  Eigen::VectorXd out(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const double one_minus_h = fac.shift * a_inv_diag(l);
    if (!(one_minus_h >= kLeverageTolerance)) {
      throw DegenerateLeverage(static_cast<std::size_t>(l), 1.0 - one_minus_h);
    }
    out(l) = values(l) - alpha(l) / a_inv_diag(l);
  }
  return out;
}

Eigen::VectorXd loo_predictions(const KernelSpec& spec, const NestedDataset& data, double lambda) {
  require_positive_lambda(lambda);
  if (data.size() < 2) throw std::invalid_argument("leave-one-out needs at least two scenarios");
  return loo_predictions_from_gram(gram(spec, data.scenarios()), data.inner_means(), lambda);
}

}  // namespace smoothnest
