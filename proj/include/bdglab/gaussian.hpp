#pragma once

#include <functional>

#include <Eigen/Core>

#include "bdglab/bilinear.hpp"
#include "bdglab/norms.hpp"
#include "bdglab/random.hpp"

namespace bdglab {

/// Estimate of a Gaussian characteristic γ(V) = (E‖ξ‖²)^{1/2}.
struct GammaEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 when exact
  long long samples = 0;
  bool exact = false;
};

/// Centered Gaussian sampler with covariance form V, via ξ = U·diag(√λ)·g.
///
/// Eigenvalues in [-tol, 0) are clipped to zero with
/// tol = max(1e-10, 1e-8·max|λ|); anything more negative is rejected.
class GaussianSampler {
 public:
  explicit GaussianSampler(const SymBilinearForm& v);

  int dim() const { return static_cast<int>(factor_.rows()); }
  int rank() const { return rank_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }  // clipped, ascending
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }

  Eigen::VectorXd sample(RandomStream& rng) const;
  void sample_into(RandomStream& rng, Eigen::VectorXd& g, Eigen::VectorXd& out) const;

 private:
  Eigen::MatrixXd factor_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd vectors_;
  int rank_ = 0;
};

Eigen::VectorXd sample_gaussian_vector(const SymBilinearForm& v, RandomStream& rng);

/// Monte Carlo estimate of (E f(ξ))^{1/2} for ξ ~ N(0, V), with the delta
/// method standard error. Samples are drawn in fixed-size blocks from
/// substreams of rng.fork(), so the value does not depend on the worker count.
GammaEstimate gamma_monte_carlo(const GaussianSampler& sampler, long long samples,
                                RandomStream& rng,
                                const std::function<double(const Eigen::VectorXd&)>& squared_norm);

/// γ(V) for PSD V. Exact when V = 0, when the norm is weighted Euclidean
/// (γ² = Σ w_i V_ii), or when V has rank one (γ = √λ‖u‖); Monte Carlo
/// otherwise, which needs samples ≥ 2.
GammaEstimate gamma_psd(const SymBilinearForm& v, const NormSpec& spec, long long samples,
                        RandomStream& rng);

/// γ(V⁺) + γ(V⁻) over the spectral split; standard errors add in quadrature.
GammaEstimate gamma_general(const SymBilinearForm& v, const NormSpec& spec, long long samples,
                            RandomStream& rng);

/// A finite-rank map from R^k (Hilbert) into X, as a d×k matrix.
struct LinearMap {
  Eigen::MatrixXd matrix;

  SymBilinearForm induced_form() const;  // T Tᵀ
};

/// ‖T‖_{γ(H,X)}, computed as γ(T Tᵀ).
GammaEstimate gamma_radonifying(const LinearMap& t, const NormSpec& spec, long long samples,
                                RandomStream& rng);

}  // namespace bdglab
