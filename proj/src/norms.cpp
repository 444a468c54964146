#include "bdglab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bdglab/errors.hpp"

namespace bdglab {

Exponent Exponent::finite(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("Exponent: p must be a finite value >= 1 (use infinity())");
  }
  return Exponent(p, false);
}

Exponent Exponent::infinity() { return Exponent(std::numeric_limits<double>::infinity(), true); }

Exponent Exponent::from_double(double p) {
  return std::isinf(p) && p > 0 ? infinity() : finite(p);
}

double Exponent::value() const { return p_; }

Exponent Exponent::conjugate() const {
  if (infinite_) return finite(1.0);
  if (p_ == 1.0) return infinity();
  return finite(p_ / (p_ - 1.0));
}

namespace {

std::string exponent_label(Exponent p) {
  if (p.is_infinite()) return "inf";
  std::ostringstream os;
  os << p.value();
  return os.str();
}

// ‖z‖_p for plain lp, scaled against overflow for general p.
double plain_lp(Exponent p, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (z.size() == 0) return 0.0;
  if (p.is_infinite()) return z.cwiseAbs().maxCoeff();
  const double pv = p.value();
  if (pv == 1.0) return z.cwiseAbs().sum();
  if (pv == 2.0) return z.norm();
  const double m = z.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) acc += std::pow(std::abs(z(i)) / m, pv);
  return m * std::pow(acc, 1.0 / pv);
}

// Maximizer of ⟨y, z⟩ over the plain lp unit ball.
Eigen::VectorXd plain_norming(Exponent p, const Eigen::Ref<const Eigen::VectorXd>& z) {
  const Eigen::Index n = z.size();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  if (n == 0) return y;
  const double m = z.cwiseAbs().maxCoeff();
  if (m == 0.0) {
    if (p.is_infinite()) {
      y.setOnes();
    } else {
      y(0) = 1.0;
    }
    return y;
  }
  if (p.is_infinite()) {
    for (Eigen::Index i = 0; i < n; ++i) y(i) = z(i) < 0.0 ? -1.0 : 1.0;
    return y;
  }
  if (p.value() == 1.0) {
    Eigen::Index arg = 0;
    z.cwiseAbs().maxCoeff(&arg);
    y(arg) = z(arg) < 0.0 ? -1.0 : 1.0;
    return y;
  }
  const double q = p.conjugate().value();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::abs(z(i)) / m;
    y(i) = std::copysign(std::pow(a, q - 1.0), z(i));
  }
  return y / plain_lp(p, y);
}

}  // namespace

NormSpec NormSpec::lp(Exponent p, int dim) {
  if (dim < 1) throw std::invalid_argument("NormSpec::lp: dim must be positive");
  NormSpec s;
  s.kind_ = NormKind::lp;
  s.dim_ = dim;
  s.p_ = p;
  return s;
}

NormSpec NormSpec::lp(double p, int dim) { return lp(Exponent::from_double(p), dim); }

NormSpec NormSpec::weighted_lp(Exponent p, Eigen::VectorXd weights) {
  if (weights.size() < 1) throw std::invalid_argument("NormSpec::weighted_lp: empty weights");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) > 0.0) || !std::isfinite(weights(i))) {
      throw std::invalid_argument("NormSpec::weighted_lp: weights must be finite and positive");
    }
  }
  NormSpec s;
  s.kind_ = NormKind::weighted_lp;
  s.dim_ = static_cast<int>(weights.size());
  s.p_ = p;
  s.weights_ = std::move(weights);
  return s;
}

NormSpec NormSpec::weighted_lp(double p, Eigen::VectorXd weights) {
  return weighted_lp(Exponent::from_double(p), std::move(weights));
}

NormSpec NormSpec::mixed(const NormSpec& outer, const NormSpec& inner) {
  if (outer.kind() == NormKind::mixed || inner.kind() == NormKind::mixed) {
    throw std::invalid_argument("NormSpec::mixed: only one nesting level is supported");
  }
  NormSpec s;
  s.kind_ = NormKind::mixed;
  s.dim_ = outer.dim() * inner.dim();
  s.p_ = outer.exponent();
  s.outer_ = std::make_shared<const NormSpec>(outer);
  s.inner_ = std::make_shared<const NormSpec>(inner);
  return s;
}

const NormSpec& NormSpec::outer() const {
  if (!outer_) throw std::logic_error("NormSpec::outer: not a mixed norm");
  return *outer_;
}

const NormSpec& NormSpec::inner() const {
  if (!inner_) throw std::logic_error("NormSpec::inner: not a mixed norm");
  return *inner_;
}

std::string NormSpec::label() const {
  switch (kind_) {
    case NormKind::lp:
      return "lp" + exponent_label(p_);
    case NormKind::weighted_lp:
      return "wlp" + exponent_label(p_);
    case NormKind::mixed:
      return "mixed(" + outer_->label() + "|" + inner_->label() + ")";
  }
  return "?";
}

Eigen::VectorXd NormSpec::coordinate_scale() const {
  if (kind_ == NormKind::mixed) throw std::logic_error("coordinate_scale: mixed norm");
  if (kind_ == NormKind::lp) return Eigen::VectorXd::Ones(dim_);
  if (p_.is_infinite()) return weights_;
  return weights_.array().pow(1.0 / p_.value()).matrix();
}

double norm(const NormSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_dim("norm", spec.dim(), x.size());
  switch (spec.kind()) {
    case NormKind::lp:
      return plain_lp(spec.exponent(), x);
    case NormKind::weighted_lp:
      return plain_lp(spec.exponent(), spec.coordinate_scale().cwiseProduct(x));
    case NormKind::mixed: {
      const NormSpec& inner = spec.inner();
      const int b = inner.dim();
      Eigen::VectorXd block_norms(spec.blocks());
      for (int k = 0; k < spec.blocks(); ++k) block_norms(k) = norm(inner, x.segment(k * b, b));
      return norm(spec.outer(), block_norms);
    }
  }
  return 0.0;
}

NormSpec dual_spec(const NormSpec& spec) {
  switch (spec.kind()) {
    case NormKind::lp:
      return NormSpec::lp(spec.exponent().conjugate(), spec.dim());
    case NormKind::weighted_lp: {
      // ‖x*‖_* = ‖x*/s‖_q; re-express 1/s as weights for exponent q.
      const Exponent q = spec.exponent().conjugate();
      const Eigen::VectorXd t = spec.coordinate_scale().cwiseInverse();
      if (q.is_infinite()) return NormSpec::weighted_lp(q, t);
      return NormSpec::weighted_lp(q, t.array().pow(q.value()).matrix());
    }
    case NormKind::mixed:
      return NormSpec::mixed(dual_spec(spec.outer()), dual_spec(spec.inner()));
  }
  throw std::logic_error("dual_spec: unknown kind");
}

double dual_norm(const NormSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xstar) {
  require_dim("dual_norm", spec.dim(), xstar.size());
  return norm(dual_spec(spec), xstar);
}

Eigen::VectorXd norming_vector(const NormSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& g) {
  require_dim("norming_vector", spec.dim(), g.size());
  switch (spec.kind()) {
    case NormKind::lp:
      return plain_norming(spec.exponent(), g);
    case NormKind::weighted_lp: {
      const Eigen::VectorXd s = spec.coordinate_scale();
      const Eigen::VectorXd y = plain_norming(spec.exponent(), g.cwiseQuotient(s));
      return y.cwiseQuotient(s);
    }
    case NormKind::mixed: {
      const NormSpec& inner = spec.inner();
      const NormSpec inner_dual = dual_spec(inner);
      const int b = inner.dim();
      Eigen::VectorXd block_duals(spec.blocks());
      for (int k = 0; k < spec.blocks(); ++k) {
        block_duals(k) = norm(inner_dual, g.segment(k * b, b));
      }
      const Eigen::VectorXd a = norming_vector(spec.outer(), block_duals);
      Eigen::VectorXd x(spec.dim());
      for (int k = 0; k < spec.blocks(); ++k) {
        x.segment(k * b, b) = a(k) * norming_vector(inner, g.segment(k * b, b));
      }
      return x;
    }
  }
  throw std::logic_error("norming_vector: unknown kind");
}

std::vector<Eigen::VectorXd> sample_dual_unit_vectors(const NormSpec& spec, int count,
                                                      RandomStream& rng) {
  std::vector<Eigen::VectorXd> out;
  if (count <= 0) return out;
  const NormSpec dual = dual_spec(spec);
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    Eigen::VectorXd g = rng.normal_vector(spec.dim());
    const double n = norm(dual, g);
    if (n == 0.0) continue;
    out.push_back(g / n);
  }
  return out;
}

std::optional<Eigen::VectorXd> euclidean_weights(const NormSpec& spec) {
  switch (spec.kind()) {
    case NormKind::lp:
      if (spec.exponent() == Exponent::finite(2.0)) return Eigen::VectorXd::Ones(spec.dim());
      return std::nullopt;
    case NormKind::weighted_lp:
      if (spec.exponent() == Exponent::finite(2.0)) return spec.weights();
      return std::nullopt;
    case NormKind::mixed: {
      auto outer = euclidean_weights(spec.outer());
      auto inner = euclidean_weights(spec.inner());
      if (!outer || !inner) return std::nullopt;
      const int b = spec.inner().dim();
      Eigen::VectorXd w(spec.dim());
      for (int k = 0; k < spec.blocks(); ++k) w.segment(k * b, b) = (*outer)(k) * (*inner);
      return w;
    }
  }
  return std::nullopt;
}

}  // namespace bdglab
