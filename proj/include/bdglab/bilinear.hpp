#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "bdglab/norms.hpp"

namespace bdglab {

/// A symmetric bilinear form on X* × X*, stored as its matrix in the dual
/// coordinate basis: V(x*, y*) = x*ᵀ M y*.
class SymBilinearForm {
 public:
  SymBilinearForm() = default;

  /// Symmetrizes `matrix`; throws if max |M - Mᵀ| exceeds
  /// asymmetry_tol · max(1, max |M_ij|).
  explicit SymBilinearForm(const Eigen::MatrixXd& matrix, double asymmetry_tol = 1e-12);

  static SymBilinearForm zero(int dim);
  static SymBilinearForm identity(int dim);
  static SymBilinearForm rank_one(const Eigen::VectorXd& x);  // x xᵀ

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& xstar,
                    const Eigen::Ref<const Eigen::VectorXd>& ystar) const;

  SymBilinearForm& operator+=(const SymBilinearForm& other);
  SymBilinearForm& operator-=(const SymBilinearForm& other);
  SymBilinearForm& operator*=(double alpha);
  void add_rank_one(const Eigen::Ref<const Eigen::VectorXd>& x, double weight = 1.0);

  friend SymBilinearForm operator+(SymBilinearForm a, const SymBilinearForm& b) { return a += b; }
  friend SymBilinearForm operator-(SymBilinearForm a, const SymBilinearForm& b) { return a -= b; }
  friend SymBilinearForm operator*(double alpha, SymBilinearForm a) { return a *= alpha; }
  SymBilinearForm operator-() const { return -1.0 * *this; }

 private:
  Eigen::MatrixXd matrix_;
};

double evaluate(const SymBilinearForm& v, const Eigen::Ref<const Eigen::VectorXd>& xstar,
                const Eigen::Ref<const Eigen::VectorXd>& ystar);

/// V = plus - minus with plus, minus PSD and plus·minus = 0, read off the
/// eigendecomposition of V.
struct SpectralSplit {
  SymBilinearForm plus;
  SymBilinearForm minus;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthogonal, columns match eigenvalues
};

SpectralSplit spectral_split(const SymBilinearForm& v);

struct AscentBudget {
  int restarts = 24;
  int iterations = 200;
  std::uint64_t seed = 0x5EED;
};

/// Bounds on ‖V‖ = sup over the dual unit ball of |V(x*, x*)|.
///
/// `lower` is the best value found by multistart ascent (attained at
/// `maximizer`). `certified_upper` is a proven upper bound, present for
///   lp(2):  the spectral radius (equal to the true value);
///   lp(1):  dual ball is the cube; vertex enumeration after lifting the
///           diagonal to be nonnegative (exact when the diagonal already is);
///   lp(∞):  dual ball is the cross-polytope; max over i≠j of |V_ij| and over
///           i of the signed diagonal, capped by the spectral radius.
struct OperatorNormBound {
  double lower = 0.0;
  std::optional<double> certified_upper;
  Eigen::VectorXd maximizer;
};

OperatorNormBound operator_norm(const SymBilinearForm& v, const NormSpec& spec,
                                const AscentBudget& budget = {});

/// Σ |V(x_i*, x_i*)| over {e_i} ∪ {e_i ± e_j : i < j}.
double vertiii_norm(const SymBilinearForm& v);

double min_eigenvalue(const SymBilinearForm& v);
bool is_psd(const SymBilinearForm& v, double tol = 1e-10);

// Smallest eigenvalue of later - earlier; ≥ -tol certifies later ≥ earlier.
double psd_gap(const SymBilinearForm& later, const SymBilinearForm& earlier);

}  // namespace bdglab
