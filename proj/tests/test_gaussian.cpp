#include <doctest.h>

#include <cmath>

#include "bdglab/bilinear.hpp"
#include "bdglab/gaussian.hpp"
#include "bdglab/norms.hpp"
#include "bdglab/random.hpp"

using namespace bdglab;

namespace {

constexpr long long kSamples = 100000;

Eigen::MatrixXd random_matrix(int r, int c, RandomStream& rng) {
  Eigen::MatrixXd a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = rng.normal();
  return a;
}

SymBilinearForm random_psd(int d, RandomStream& rng) {
  Eigen::MatrixXd a = random_matrix(d, d, rng);
  return SymBilinearForm(a * a.transpose());
}

SymBilinearForm random_symmetric(int d, RandomStream& rng) {
  Eigen::MatrixXd a = random_matrix(d, d, rng);
  return SymBilinearForm(0.5 * (a + a.transpose()));
}

double tol(const GammaEstimate& a, const GammaEstimate& b) {
  return 4.0 * std::hypot(a.std_error, b.std_error) + 1e-10 * std::max(1.0, a.value + b.value);
}

}  // namespace

TEST_CASE("zero form has zero characteristic") {
  RandomStream rng(31);
  auto g = gamma_psd(SymBilinearForm::zero(3), NormSpec::lp(1.0, 3), kSamples, rng);
  CHECK(g.value == 0.0);
  CHECK(g.exact);
}

TEST_CASE("sampler reproduces the covariance") {
  Eigen::Matrix2d m;
  m << 1, 0, 0, 1;
  GaussianSampler s{SymBilinearForm(m)};
  RandomStream rng(32);
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = s.sample(rng);
    acc += x * x.transpose();
  }
  acc /= n;
  CHECK((acc - m).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("sampler rejects clearly negative forms and clips rounding") {
  Eigen::Matrix2d m;
  m << 1, 0, 0, -1;
  CHECK_THROWS(GaussianSampler{SymBilinearForm(m)});
  m << 1, 0, 0, -1e-14;
  GaussianSampler s{SymBilinearForm(m)};
  CHECK(s.rank() == 1);
}

TEST_CASE("rank one multiples give the norm of the vector") {
  RandomStream rng(33);
  Eigen::Vector3d x(1, -2, 0.5);
  for (double p : {1.0, 2.0, 3.0}) {
    auto spec = NormSpec::lp(p, 3);
    for (double a : {0.25, 1.0, 9.0}) {
      auto g = gamma_psd(a * SymBilinearForm::rank_one(x), spec, kSamples, rng);
      CHECK(g.value == doctest::Approx(std::sqrt(a) * norm(spec, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("euclidean branch") {
  RandomStream rng(34);
  for (int d : {1, 2, 5}) {
    auto g = gamma_psd(SymBilinearForm::identity(d), NormSpec::lp(2.0, d), kSamples, rng);
    CHECK(g.exact);
    CHECK(g.value == doctest::Approx(std::sqrt(static_cast<double>(d))).epsilon(1e-14));
  }
  Eigen::Matrix2d m;
  m << 1, 0, 0, -1;
  auto g = gamma_general(SymBilinearForm(m), NormSpec::lp(2.0, 2), kSamples, rng);
  CHECK(g.value == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("identity under lp(inf) against a quadrature oracle") {
  // E max(|g1|,|g2|)^2 = 1 + 2/pi for independent standard normals
  RandomStream rng(35);
  auto g = gamma_psd(SymBilinearForm::identity(2), NormSpec::lp(Exponent::infinity(), 2),
                     kSamples, rng);
  CHECK_FALSE(g.exact);
  CHECK(std::abs(g.value - std::sqrt(1.0 + 2.0 / M_PI)) < 4.0 * g.std_error);
}

TEST_CASE("radonifying norm") {
  RandomStream rng(36);
  LinearMap id{Eigen::MatrixXd::Identity(3, 3)};
  CHECK(gamma_radonifying(id, NormSpec::lp(2.0, 3), kSamples, rng).value ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));

  Eigen::Vector3d x(2, -1, 3);
  Eigen::Vector4d h = Eigen::Vector4d(1, 2, -1, 1).normalized();
  LinearMap t{x * h.transpose()};
  for (double p : {1.0, 2.0, 4.0}) {
    auto spec = NormSpec::lp(p, 3);
    CHECK(gamma_radonifying(t, spec, kSamples, rng).value ==
          doctest::Approx(norm(spec, x)).epsilon(1e-10));
  }
  for (int trial = 0; trial < 20; ++trial) {
    LinearMap r{random_matrix(4, 3, rng)};
    double g = gamma_radonifying(r, NormSpec::lp(2.0, 4), kSamples, rng).value;
    CHECK(std::abs(g * g - r.matrix.squaredNorm()) < 1e-12 * std::max(1.0, g * g));
  }
}

TEST_CASE("scaling") {
  RandomStream rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    auto v = random_symmetric(3, rng);
    for (double alpha : {0.0, 0.5, 4.0}) {
      auto e = gamma_general(alpha * v, NormSpec::lp(2.0, 3), kSamples, rng);
      auto b = gamma_general(v, NormSpec::lp(2.0, 3), kSamples, rng);
      CHECK(e.value == doctest::Approx(std::sqrt(alpha) * b.value).epsilon(1e-12));
    }
    auto spec = NormSpec::lp(1.0, 3);
    auto a = gamma_general(4.0 * v, spec, kSamples, rng);
    auto b = gamma_general(v, spec, kSamples, rng);
    CHECK(std::abs(a.value - 2.0 * b.value) <= 4.0 * std::hypot(a.std_error, 2.0 * b.std_error));
  }
}

TEST_CASE("triangle and reverse triangle") {
  RandomStream rng(38);
  auto spec = NormSpec::lp(3.0, 3);
  for (int trial = 0; trial < 10; ++trial) {
    auto v = random_psd(3, rng), w = random_psd(3, rng);
    auto gvw = gamma_psd(v + w, spec, kSamples, rng);
    auto gv = gamma_psd(v, spec, kSamples, rng);
    auto gw = gamma_psd(w, spec, kSamples, rng);
    GammaEstimate sum{gv.value + gw.value, std::hypot(gv.std_error, gw.std_error)};
    CHECK(gvw.value <= sum.value + tol(gvw, sum));

    auto a = random_symmetric(3, rng), b = random_symmetric(3, rng);
    auto ga = gamma_general(a, spec, kSamples, rng);
    auto gb = gamma_general(b, spec, kSamples, rng);
    auto gd = gamma_general(a - b, spec, kSamples, rng);
    GammaEstimate diff{ga.value - gb.value, std::hypot(ga.std_error, gb.std_error)};
    CHECK(diff.value <= gd.value + tol(diff, gd));
  }
}

TEST_CASE("monotonicity in the psd order") {
  RandomStream rng(39);
  auto spec = NormSpec::lp(Exponent::infinity(), 3);
  for (int trial = 0; trial < 10; ++trial) {
    auto w = random_psd(3, rng);
    auto v = w + random_psd(3, rng);
    auto gw = gamma_psd(w, spec, kSamples, rng);
    auto gv = gamma_psd(v, spec, kSamples, rng);
    CHECK(gw.value <= gv.value + tol(gw, gv));
  }
}

TEST_CASE("restriction to leading coordinates") {
  RandomStream rng(40);
  auto spec = NormSpec::lp(1.5, 4);
  for (int trial = 0; trial < 5; ++trial) {
    GaussianSampler s(random_psd(4, rng));
    RandomStream a(400 + trial), b(400 + trial);
    auto full = gamma_monte_carlo(s, 20000, a, [&](const Eigen::VectorXd& x) {
      double n = norm(spec, x);
      return n * n;
    });
    auto restricted = gamma_monte_carlo(s, 20000, b, [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd y = x;
      y.tail(2).setZero();
      double n = norm(spec, y);
      return n * n;
    });
    // same draws, pointwise smaller
    CHECK(restricted.value <= full.value);
  }
}

TEST_CASE("monotone continuity along scalings") {
  RandomStream rng(41);
  auto spec = NormSpec::lp(1.0, 3);
  auto v = random_psd(3, rng);
  double prev = 0.0;
  for (double t : {0.25, 0.5, 0.75, 0.9, 0.99, 1.0}) {
    RandomStream same(410);
    double g = gamma_psd(t * v, spec, kSamples, same).value;
    CHECK(g > prev);
    prev = g;
  }
  RandomStream same(410);
  double g1 = gamma_psd(v, spec, kSamples, same).value;
  double last = g1;
  for (int n : {10, 100, 10000}) {
    RandomStream s(410);
    last = gamma_psd((1.0 / n) * v, spec, kSamples, s).value;
  }
  CHECK(last == doctest::Approx(g1 / 100.0).epsilon(1e-10));
}

TEST_CASE("hilbert pythagoras") {
  RandomStream rng(42);
  auto spec = NormSpec::lp(2.0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    auto v = random_psd(4, rng), w = random_psd(4, rng);
    double a = gamma_psd(v + w, spec, kSamples, rng).value;
    double b = gamma_psd(v, spec, kSamples, rng).value;
    double c = gamma_psd(w, spec, kSamples, rng).value;
    CHECK(a * a == doctest::Approx(b * b + c * c).epsilon(1e-12));
  }
}

TEST_CASE("square bound in the euclidean case") {
  // γ(V)² = (√tr V⁺ + √tr V⁻)² ≤ 2 tr|V| ≤ 2d ρ(V); diag(1,-1) attains it
  RandomStream rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    int d = 1 + trial % 5;
    auto v = random_symmetric(d, rng);
    double g = gamma_general(v, NormSpec::lp(2.0, d), kSamples, rng).value;
    double rho = *operator_norm(v, NormSpec::lp(2.0, d)).certified_upper;
    CHECK(g * g <= 2.0 * d * rho * (1 + 1e-12));
  }
  Eigen::Matrix2d m;
  m << 1, 0, 0, -1;
  double g = gamma_general(SymBilinearForm(m), NormSpec::lp(2.0, 2), kSamples, rng).value;
  CHECK(g * g == doctest::Approx(4.0));
}

TEST_CASE("square bound constant is stable across ensembles") {
  RandomStream rng(44);
  for (double p : {1.0, 4.0}) {
    const int d = 3;
    auto spec = NormSpec::lp(p, d);
    auto worst = [&](int count) {
      double k = 0.0;
      for (int i = 0; i < count; ++i) {
        auto v = random_symmetric(d, rng);
        double g = gamma_general(v, spec, 20000, rng).value;
        double n = operator_norm(v, spec).lower;
        k = std::max(k, g * g / n);
      }
      return k;
    };
    double calibrated = worst(30);
    double held_out = worst(30);
    CHECK(held_out <= 1.5 * calibrated);
  }
}

TEST_CASE("spectral split beats alternative decompositions") {
  RandomStream rng(45);
  auto spec = NormSpec::lp(1.0, 3);
  for (int trial = 0; trial < 8; ++trial) {
    auto v = random_symmetric(3, rng);
    auto split = spectral_split(v);
    auto r = random_psd(3, rng);
    auto gp = gamma_psd(split.plus + r, spec, kSamples, rng);
    auto gq = gamma_psd(split.minus + r, spec, kSamples, rng);
    auto gv = gamma_general(v, spec, kSamples, rng);
    double se = std::sqrt(gp.std_error * gp.std_error + gq.std_error * gq.std_error +
                          gv.std_error * gv.std_error);
    CHECK(gp.value + gq.value >= gv.value - 4.0 * se);
  }
}

TEST_CASE("estimates are reproducible from the seed") {
  auto v = SymBilinearForm::identity(3);
  auto spec = NormSpec::lp(1.0, 3);
  RandomStream a(46), b(46);
  auto x = gamma_psd(v, spec, 50000, a);
  auto y = gamma_psd(v, spec, 50000, b);
  CHECK(x.value == y.value);
  CHECK(x.std_error == y.std_error);
  CHECK(x.samples == 50000);
}
