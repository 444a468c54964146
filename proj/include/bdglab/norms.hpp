#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bdglab/random.hpp"

namespace bdglab {

/// An lp exponent in [1, ∞]; infinity is a tag, not a large float.
class Exponent {
 public:
  static Exponent finite(double p);
  static Exponent infinity();
  static Exponent from_double(double p);  // maps +inf to the tag

  bool is_infinite() const { return infinite_; }
  double value() const;  // +inf for the tag
  Exponent conjugate() const;

  bool operator==(const Exponent& other) const = default;

 private:
  Exponent(double p, bool infinite) : p_(p), infinite_(infinite) {}
  double p_;
  bool infinite_;
};

enum class NormKind { lp, weighted_lp, mixed };

/// A norm on coordinate space R^d.
///
///   lp(p):              (Σ |x_i|^p)^{1/p}, or max |x_i| for p = ∞
///   weighted_lp(p, w):  (Σ w_i |x_i|^p)^{1/p}, or max w_i |x_i| for p = ∞
///   mixed(outer, inner): outer applied to the vector of inner norms of
///                        consecutive blocks of size inner.dim()
///
/// Mixed norms nest one level: outer and inner are lp or weighted_lp.
class NormSpec {
 public:
  static NormSpec lp(Exponent p, int dim);
  static NormSpec lp(double p, int dim);
  static NormSpec weighted_lp(Exponent p, Eigen::VectorXd weights);
  static NormSpec weighted_lp(double p, Eigen::VectorXd weights);
  static NormSpec mixed(const NormSpec& outer, const NormSpec& inner);

  NormKind kind() const { return kind_; }
  int dim() const { return dim_; }
  Exponent exponent() const { return p_; }
  const Eigen::VectorXd& weights() const { return weights_; }  // empty for plain lp
  const NormSpec& outer() const;
  const NormSpec& inner() const;
  int blocks() const { return kind_ == NormKind::mixed ? outer_->dim() : 1; }

  // Short label without commas, e.g. "lp2", "lpinf", "wlp1", "mixed(lp2|lp1)".
  std::string label() const;

  // Coordinate scale s with ‖x‖ = ‖s∘x‖_p (lp kinds only).
  Eigen::VectorXd coordinate_scale() const;

 private:
  NormSpec() : p_(Exponent::finite(2.0)) {}

  NormKind kind_ = NormKind::lp;
  int dim_ = 0;
  Exponent p_;
  Eigen::VectorXd weights_;
  std::shared_ptr<const NormSpec> outer_;
  std::shared_ptr<const NormSpec> inner_;
};

double norm(const NormSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);
double dual_norm(const NormSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xstar);

// The norm of X* in the same coordinates; dual_spec(dual_spec(s)) == s.
NormSpec dual_spec(const NormSpec& spec);

/// A maximizer of ⟨x, g⟩ over the unit ball of `spec`: norm(x) = 1 and
/// ⟨x, g⟩ = dual_norm(spec, g). Applied to x* it gives the dual-aligned vector.
Eigen::VectorXd norming_vector(const NormSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& g);

/// `count` Gaussian directions normalized to unit dual norm.
std::vector<Eigen::VectorXd> sample_dual_unit_vectors(const NormSpec& spec, int count,
                                                      RandomStream& rng);

/// Weights w with ‖x‖² = Σ w_i x_i², if the norm is a weighted Euclidean one.
std::optional<Eigen::VectorXd> euclidean_weights(const NormSpec& spec);

}  // namespace bdglab
