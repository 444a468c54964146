#include "bdglab/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bdglab/errors.hpp"
#include "bdglab/parallel.hpp"
#include "bdglab/stats.hpp"

namespace bdglab {

namespace {
constexpr long long kBlockSize = 4096;
}

GaussianSampler::GaussianSampler(const SymBilinearForm& v) {
  const int d = v.dim();
  if (d == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(v.matrix());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("GaussianSampler: eigendecomposition failed");
  }
  lambda_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
  const double scale = lambda_.cwiseAbs().maxCoeff();
  const double tol = std::max(1e-10, 1e-8 * scale);
  if (lambda_(0) < -tol) {
    throw std::invalid_argument("GaussianSampler: covariance form is not positive semidefinite "
                                "(min eigenvalue " + std::to_string(lambda_(0)) + ")");
  }
  for (int i = 0; i < d; ++i) {
    lambda_(i) = std::max(lambda_(i), 0.0);
    if (lambda_(i) > 1e-8 * scale) ++rank_;
  }
  factor_ = vectors_ * lambda_.cwiseSqrt().asDiagonal();
}

Eigen::VectorXd GaussianSampler::sample(RandomStream& rng) const {
  Eigen::VectorXd g;
  Eigen::VectorXd out;
  sample_into(rng, g, out);
  return out;
}

void GaussianSampler::sample_into(RandomStream& rng, Eigen::VectorXd& g,
                                  Eigen::VectorXd& out) const {
  const Eigen::Index d = factor_.rows();
  g.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) g(i) = rng.normal();
  out.noalias() = factor_ * g;
}

Eigen::VectorXd sample_gaussian_vector(const SymBilinearForm& v, RandomStream& rng) {
  return GaussianSampler(v).sample(rng);
}

GammaEstimate gamma_monte_carlo(const GaussianSampler& sampler, long long samples,
                                RandomStream& rng,
                                const std::function<double(const Eigen::VectorXd&)>& squared_norm) {
  if (samples < 2) throw std::invalid_argument("gamma_monte_carlo: need at least 2 samples");
  const RandomStream base = rng.fork();
  const long long blocks = (samples + kBlockSize - 1) / kBlockSize;
  std::vector<RunningStats> partial(static_cast<std::size_t>(blocks));
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    RandomStream stream = base.substream(b);
    const long long begin = static_cast<long long>(b) * kBlockSize;
    const long long end = std::min(samples, begin + kBlockSize);
    Eigen::VectorXd g;
    Eigen::VectorXd xi;
    RunningStats stats;
    for (long long s = begin; s < end; ++s) {
      sampler.sample_into(stream, g, xi);
      stats.add(squared_norm(xi));
    }
    partial[b] = stats;
  });
  RunningStats total;
  for (const auto& p : partial) total.merge(p);

  GammaEstimate est;
  est.samples = samples;
  est.value = std::sqrt(std::max(total.mean(), 0.0));
  est.std_error = est.value > 0.0 ? total.std_error() / (2.0 * est.value) : 0.0;
  return est;
}

GammaEstimate gamma_psd(const SymBilinearForm& v, const NormSpec& spec, long long samples,
                        RandomStream& rng) {
  require_dim("gamma_psd", spec.dim(), v.dim());
  const GaussianSampler sampler(v);
  GammaEstimate est;
  est.exact = true;
  if (sampler.rank() == 0) return est;

  if (const auto w = euclidean_weights(spec)) {
    const double second_moment = w->dot(v.matrix().diagonal());
    est.value = std::sqrt(std::max(second_moment, 0.0));
    return est;
  }
  if (sampler.rank() == 1) {
    const Eigen::Index top = sampler.eigenvalues().size() - 1;
    est.value = std::sqrt(sampler.eigenvalues()(top)) * norm(spec, sampler.eigenvectors().col(top));
    return est;
  }
  est = gamma_monte_carlo(sampler, samples, rng, [&spec](const Eigen::VectorXd& xi) {
    const double n = norm(spec, xi);
    return n * n;
  });
  return est;
}

GammaEstimate gamma_general(const SymBilinearForm& v, const NormSpec& spec, long long samples,
                            RandomStream& rng) {
  const SpectralSplit split = spectral_split(v);
  const GammaEstimate a = gamma_psd(split.plus, spec, samples, rng);
  const GammaEstimate b = gamma_psd(split.minus, spec, samples, rng);
  GammaEstimate est;
  est.value = a.value + b.value;
  est.std_error = std::hypot(a.std_error, b.std_error);
  est.samples = a.samples + b.samples;
  est.exact = a.exact && b.exact;
  return est;
}

SymBilinearForm LinearMap::induced_form() const {
  return SymBilinearForm(matrix * matrix.transpose(), 1e-10);
}

GammaEstimate gamma_radonifying(const LinearMap& t, const NormSpec& spec, long long samples,
                                RandomStream& rng) {
  return gamma_psd(t.induced_form(), spec, samples, rng);
}

}  // namespace bdglab
