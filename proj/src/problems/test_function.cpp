#include "smoothnest/problems/test_function.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace smoothnest {

namespace {

constexpr std::uint64_t kMakeStream = 0x7466'6d61'6b65ULL;
constexpr std::uint64_t kSimStream = 0x7466'7369'6dULL;
constexpr std::uint64_t kTruthStream = 0x7466'7472'7574'68ULL;

const double kTenthSd = std::sqrt(0.1);

double truncated_normal(double sd, Rng& rng) {
  if (sd == 0.0) return 0.0;
  for (;;) {
    const double v = sd * standard_normal(rng);
    if (v >= -1.0 && v <= 1.0) return v;
  }
}

}  // namespace

double TestFunctionProblem::f(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != centers.cols()) {
    throw std::invalid_argument("test function: point has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(centers.cols()));
  }
  if (!x.allFinite()) throw std::invalid_argument("test function: non-finite point");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < centers.rows(); ++i) {
    const Eigen::VectorXd c = centers.row(i).transpose();
    acc += coeffs(i) * spec.radial(spec.scaled_distance(x.data(), c.data(), x.size()));
  }
  return acc;
}

Eigen::VectorXd TestFunctionProblem::f_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs) const {
  return cross_matrix(spec, centers, xs) * coeffs;
}

TestFunctionProblem testfn_make(int d, double nu, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("test function dimension must be at least 1");
  Rng rng = derive_stream(seed, {kMakeStream, static_cast<std::uint64_t>(d)});
  Eigen::MatrixXd centers(kTestFunctionCenters, d);
  Eigen::VectorXd coeffs(kTestFunctionCenters);
  for (int i = 0; i < kTestFunctionCenters; ++i) {
    coeffs(i) = 20.0 + 30.0 * uniform_open(rng);
    for (int j = 0; j < d; ++j) centers(i, j) = kTenthSd * standard_normal(rng);
  }
  return {KernelSpec(nu, 1.0), std::move(centers), std::move(coeffs), kTenthSd, kTenthSd};
}

Eigen::MatrixXd testfn_outer(const TestFunctionProblem& problem, long n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("scenario count must be at least 1");
  Eigen::MatrixXd x(n, problem.dim());
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < problem.dim(); ++j) x(i, j) = truncated_normal(problem.scenario_sd, rng);
  }
  return x;
}

double testfn_inner_mean(const TestFunctionProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& x, long m,
                         Rng& rng) {
  if (m < 1) throw std::invalid_argument("inner sample count must be at least 1");
  double noise = 0.0;
  if (problem.noise_sd > 0.0) {
    for (long k = 0; k < m; ++k) noise += standard_normal(rng);
    noise *= problem.noise_sd / static_cast<double>(m);
  }
  return problem.f(x) + noise;
}

SimulatedData testfn_simulate(const TestFunctionProblem& problem, long n, long m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("inner sample count must be at least 1");
  Rng rng = derive_stream(seed, {kSimStream, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(m)});
  Eigen::MatrixXd x = testfn_outer(problem, n, rng);
  Eigen::VectorXd truth = problem.f_batch(x);
  Eigen::VectorXd ybar(n);
  for (long i = 0; i < n; ++i) {
    double noise = 0.0;
    if (problem.noise_sd > 0.0) {
      for (long k = 0; k < m; ++k) noise += standard_normal(rng);
      noise *= problem.noise_sd / static_cast<double>(m);
    }
    ybar(i) = truth(i) + noise;
  }
  return {NestedDataset(std::move(x), std::move(ybar), m), std::move(truth)};
}

TrueTheta testfn_true_theta(const TestFunctionProblem& problem, const Functional& functional, long mc_n,
                            std::uint64_t seed) {
  if (mc_n < kMinOracleDraws) throw std::invalid_argument("true-theta oracle needs at least 1e4 draws");
  Rng rng = derive_stream(seed, {kTruthStream, static_cast<std::uint64_t>(mc_n)});
  constexpr long kChunk = 4096;
  Eigen::VectorXd z(mc_n);
  for (long start = 0; start < mc_n; start += kChunk) {
    const long len = std::min(kChunk, mc_n - start);
    const Eigen::MatrixXd x = testfn_outer(problem, len, rng);
    z.segment(start, len) = problem.f_batch(x);
  }
  return mc_theta(functional, z);
}

}  // namespace smoothnest
