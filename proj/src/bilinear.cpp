#include "bdglab/bilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bdglab/errors.hpp"

namespace bdglab {

SymBilinearForm::SymBilinearForm(const Eigen::MatrixXd& matrix, double asymmetry_tol) {
  if (matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("SymBilinearForm: matrix must be square");
  }
  if (matrix.size() > 0) {
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= asymmetry_tol * scale)) {
      throw std::invalid_argument("SymBilinearForm: matrix is not symmetric (asymmetry " +
                                  std::to_string(asym) + ")");
    }
  }
  matrix_ = 0.5 * (matrix + matrix.transpose());
}

SymBilinearForm SymBilinearForm::zero(int dim) {
  SymBilinearForm f;
  f.matrix_ = Eigen::MatrixXd::Zero(dim, dim);
  return f;
}

SymBilinearForm SymBilinearForm::identity(int dim) {
  SymBilinearForm f;
  f.matrix_ = Eigen::MatrixXd::Identity(dim, dim);
  return f;
}

SymBilinearForm SymBilinearForm::rank_one(const Eigen::VectorXd& x) {
  SymBilinearForm f = zero(static_cast<int>(x.size()));
  f.add_rank_one(x);
  return f;
}

double SymBilinearForm::operator()(const Eigen::Ref<const Eigen::VectorXd>& xstar,
                                   const Eigen::Ref<const Eigen::VectorXd>& ystar) const {
  require_dim("SymBilinearForm::evaluate", dim(), xstar.size());
  require_dim("SymBilinearForm::evaluate", dim(), ystar.size());
  return xstar.dot(matrix_ * ystar);
}

SymBilinearForm& SymBilinearForm::operator+=(const SymBilinearForm& other) {
  require_dim("SymBilinearForm::operator+=", dim(), other.dim());
  matrix_ += other.matrix_;
  return *this;
}

SymBilinearForm& SymBilinearForm::operator-=(const SymBilinearForm& other) {
  require_dim("SymBilinearForm::operator-=", dim(), other.dim());
  matrix_ -= other.matrix_;
  return *this;
}

SymBilinearForm& SymBilinearForm::operator*=(double alpha) {
  matrix_ *= alpha;
  return *this;
}

void SymBilinearForm::add_rank_one(const Eigen::Ref<const Eigen::VectorXd>& x, double weight) {
  require_dim("SymBilinearForm::add_rank_one", dim(), x.size());
  // Entry (i, j) is computed as weight*x_i*x_j in both triangles, so the sum
  // stays exactly symmetric.
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double wj = weight * x(j);
    for (Eigen::Index i = 0; i < x.size(); ++i) matrix_(i, j) += wj * x(i);
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    for (Eigen::Index i = j + 1; i < x.size(); ++i) matrix_(j, i) = matrix_(i, j);
  }
}

double evaluate(const SymBilinearForm& v, const Eigen::Ref<const Eigen::VectorXd>& xstar,
                const Eigen::Ref<const Eigen::VectorXd>& ystar) {
  return v(xstar, ystar);
}

SpectralSplit spectral_split(const SymBilinearForm& v) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(v.matrix());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("spectral_split: eigendecomposition failed");
  }
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const Eigen::MatrixXd& u = solver.eigenvectors();
  const Eigen::VectorXd pos = lambda.cwiseMax(0.0);
  const Eigen::VectorXd neg = (-lambda).cwiseMax(0.0);
  SpectralSplit split;
  split.plus = SymBilinearForm(u * pos.asDiagonal() * u.transpose(), 1e-8);
  split.minus = SymBilinearForm(u * neg.asDiagonal() * u.transpose(), 1e-8);
  split.eigenvalues = lambda;
  split.eigenvectors = u;
  return split;
}

double min_eigenvalue(const SymBilinearForm& v) {
  if (v.dim() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(v.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("min_eigenvalue: solver failed");
  return solver.eigenvalues()(0);
}

bool is_psd(const SymBilinearForm& v, double tol) { return min_eigenvalue(v) >= -tol; }

double psd_gap(const SymBilinearForm& later, const SymBilinearForm& earlier) {
  return min_eigenvalue(later - earlier);
}

double vertiii_norm(const SymBilinearForm& v) {
  const Eigen::MatrixXd& m = v.matrix();
  const Eigen::Index d = m.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) acc += std::abs(m(i, i));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double cross = 2.0 * m(i, j);
      acc += std::abs(m(i, i) + m(j, j) + cross);
      acc += std::abs(m(i, i) + m(j, j) - cross);
    }
  }
  return acc;
}

namespace {

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

constexpr int kMaxVertexDim = 16;

// max of xᵀ A x over x ∈ {±1}^d; the first sign is fixed by symmetry.
double cube_vertex_max(const Eigen::MatrixXd& a, Eigen::VectorXd* argmax) {
  const Eigen::Index d = a.rows();
  const std::uint64_t count = std::uint64_t{1} << (d - 1);
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(d);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    x(0) = 1.0;
    for (Eigen::Index i = 1; i < d; ++i) x(i) = (mask >> (i - 1)) & 1U ? -1.0 : 1.0;
    const double val = x.dot(a * x);
    if (val > best) {
      best = val;
      if (argmax) *argmax = x;
    }
  }
  return best;
}

class QuadraticAscent {
 public:
  QuadraticAscent(const Eigen::MatrixXd& a, const NormSpec& spec)
      : a_(a), dual_(dual_spec(spec)) {
    const double rho = spectral_radius(a);
    step0_ = rho > 0.0 ? 1.0 / rho : 1.0;
  }

  double value(const Eigen::VectorXd& x) const { return x.dot(a_ * x); }

  // Projects a nonzero start onto the dual unit sphere and climbs.
  double climb(Eigen::VectorXd x, int iterations, Eigen::VectorXd* out) const {
    const double n0 = norm(dual_, x);
    if (n0 == 0.0) return -std::numeric_limits<double>::infinity();
    x /= n0;
    double fx = value(x);
    for (int it = 0; it < iterations; ++it) {
      const Eigen::VectorXd g = a_ * x;
      bool moved = false;
      // Linear maximization over the ball: monotone when A is PSD.
      Eigen::VectorXd y = norming_vector(dual_, g);
      double fy = value(y);
      if (fy > fx + 1e-15 * std::abs(fx)) {
        x = y;
        fx = fy;
        moved = true;
      } else {
        double eta = step0_;
        for (int h = 0; h < 30; ++h, eta *= 0.5) {
          y = x + eta * g;
          const double ny = norm(dual_, y);
          if (ny == 0.0) continue;
          y /= ny;
          fy = value(y);
          if (fy > fx + 1e-15 * std::abs(fx)) {
            x = y;
            fx = fy;
            moved = true;
            break;
          }
        }
      }
      if (!moved) break;
    }
    if (dual_.kind() != NormKind::mixed && dual_.exponent() == Exponent::finite(1.0)) {
      polish_face(x, fx);
    }
    if (out) *out = x;
    return fx;
  }

  // On an l1-type ball, solves for the stationary point of the face holding
  // x and keeps it when feasible and better.
  void polish_face(Eigen::VectorXd& x, double& fx) const {
    const Eigen::Index d = x.size();
    const double big = x.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(x(i)) > 1e-9 * big) support.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(support.size());
    if (k < 2) return;
    Eigen::MatrixXd sub(k, k);
    Eigen::VectorXd c(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index i = support[static_cast<std::size_t>(a)];
      c(a) = norm(dual_, Eigen::VectorXd::Unit(d, i)) * (x(i) > 0.0 ? 1.0 : -1.0);
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = a_(i, support[static_cast<std::size_t>(b)]);
    }
    const Eigen::VectorXd z = sub.fullPivLu().solve(c);
    if (!z.allFinite()) return;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index i = support[static_cast<std::size_t>(a)];
      if (z(a) * c(a) <= 0.0) return;  // leaves the face
      y(i) = z(a);
    }
    y /= norm(dual_, y);
    const double fy = value(y);
    if (fy > fx) {
      x = y;
      fx = fy;
    }
  }

 private:
  const Eigen::MatrixXd& a_;
  NormSpec dual_;
  double step0_ = 1.0;
};

bool is_unweighted_or_weighted_lp(const NormSpec& spec) { return spec.kind() != NormKind::mixed; }

}  // namespace

OperatorNormBound operator_norm(const SymBilinearForm& v, const NormSpec& spec,
                                const AscentBudget& budget) {
  const int d = v.dim();
  require_dim("operator_norm", spec.dim(), d);
  OperatorNormBound result;
  result.maximizer = Eigen::VectorXd::Zero(d);
  if (d == 0) return result;

  std::vector<Eigen::VectorXd> starts;
  for (int i = 0; i < d; ++i) starts.push_back(Eigen::VectorXd::Unit(d, i));
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      starts.push_back(Eigen::VectorXd::Unit(d, i) + Eigen::VectorXd::Unit(d, j));
      starts.push_back(Eigen::VectorXd::Unit(d, i) - Eigen::VectorXd::Unit(d, j));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v.matrix());
  for (int i = 0; i < d; ++i) starts.push_back(eig.eigenvectors().col(i));
  RandomStream rng(budget.seed);
  for (int r = 0; r < budget.restarts; ++r) starts.push_back(rng.normal_vector(d));

  // Certificates, computed on the unit-ball coordinates u with x* = s∘u.
  std::optional<double> upper;
  if (is_unweighted_or_weighted_lp(spec)) {
    const Eigen::VectorXd s = dual_spec(spec).coordinate_scale().cwiseInverse();
    const Eigen::MatrixXd scaled = s.asDiagonal() * v.matrix() * s.asDiagonal();
    const Exponent p = spec.exponent();
    if (p == Exponent::finite(2.0)) {
      upper = spectral_radius(scaled);
    } else if (p == Exponent::finite(1.0) && d <= kMaxVertexDim) {
      double bound = 0.0;
      for (double sign : {1.0, -1.0}) {
        Eigen::MatrixXd a = sign * scaled;
        const Eigen::VectorXd lift = (-a.diagonal()).cwiseMax(0.0);
        a.diagonal() += lift;
        Eigen::VectorXd vertex;
        bound = std::max(bound, cube_vertex_max(a, &vertex));
        starts.push_back(s.cwiseProduct(vertex));
      }
      upper = bound;
    } else if (p.is_infinite()) {
      double bound = 0.0;
      for (double sign : {1.0, -1.0}) {
        const Eigen::MatrixXd a = sign * scaled;
        for (int i = 0; i < d; ++i) {
          bound = std::max(bound, a(i, i));
          for (int j = 0; j < d; ++j) {
            if (i != j) bound = std::max(bound, std::abs(a(i, j)));
          }
        }
      }
      upper = std::min(bound, spectral_radius(scaled));
    }
  }

  double best = 0.0;
  for (double sign : {1.0, -1.0}) {
    const Eigen::MatrixXd a = sign * v.matrix();
    QuadraticAscent ascent(a, spec);
    for (const auto& start : starts) {
      Eigen::VectorXd x;
      const double val = ascent.climb(start, budget.iterations, &x);
      if (val > best) {
        best = val;
        result.maximizer = x;
      }
    }
  }
  result.lower = best;
  result.certified_upper = upper;
  return result;
}

}  // namespace bdglab
