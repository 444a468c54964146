#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "bdglab/bilinear.hpp"
#include "bdglab/random.hpp"

using namespace bdglab;

namespace {

SymBilinearForm form2(double a, double b, double c) {
  Eigen::Matrix2d m;
  m << a, b, b, c;
  return SymBilinearForm(m);
}

SymBilinearForm random_form(int d, RandomStream& rng) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  return SymBilinearForm(0.5 * (a + a.transpose()));
}

}  // namespace

TEST_CASE("form basics") {
  auto v = form2(1, 2, 3);
  Eigen::Vector2d x(1, 0), y(0, 1);
  CHECK(v(x, y) == 2.0);
  CHECK(evaluate(v, y, y) == 3.0);
  auto r = SymBilinearForm::rank_one(Eigen::Vector2d(1, 2));
  CHECK(r.matrix()(0, 1) == 2.0);
  SymBilinearForm acc = SymBilinearForm::zero(2);
  acc.add_rank_one(Eigen::Vector2d(1, 2), 0.5);
  CHECK(acc.matrix().isApprox(0.5 * r.matrix()));
  CHECK((2.0 * r - r).matrix().isApprox(r.matrix()));
  Eigen::Matrix2d bad;
  bad << 1, 2, 3, 4;
  CHECK_THROWS(SymBilinearForm{bad});
}

TEST_CASE("spectral split of a diagonal form") {
  auto s = spectral_split(form2(2, 0, -3));
  CHECK(s.plus.matrix().isApprox((Eigen::Matrix2d() << 2, 0, 0, 0).finished(), 1e-14));
  CHECK(s.minus.matrix().isApprox((Eigen::Matrix2d() << 0, 0, 0, 3).finished(), 1e-14));
}

TEST_CASE("spectral split of the swap form") {
  auto s = spectral_split(form2(0, 1, 0));
  Eigen::Matrix2d plus, minus;
  plus << 0.5, 0.5, 0.5, 0.5;
  minus << 0.5, -0.5, -0.5, 0.5;
  CHECK((s.plus.matrix() - plus).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((s.minus.matrix() - minus).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("spectral split invariants on random forms") {
  RandomStream rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    int d = 2 + trial % 5;
    auto v = random_form(d, rng);
    auto s = spectral_split(v);
    CHECK(((s.plus - s.minus).matrix() - v.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(is_psd(s.plus));
    CHECK(is_psd(s.minus));
    CHECK((s.plus.matrix() * s.minus.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("operator norm on hand examples") {
  auto e = operator_norm(form2(2, 0, -5), NormSpec::lp(2.0, 2));
  CHECK(e.lower == doctest::Approx(5.0).epsilon(1e-12));
  REQUIRE(e.certified_upper.has_value());
  CHECK(*e.certified_upper == doctest::Approx(5.0).epsilon(1e-12));

  // dual ball of lp(1) is the cube; (x1 + x2)^2 peaks at 4
  auto c = operator_norm(form2(1, 1, 1), NormSpec::lp(1.0, 2));
  CHECK(c.lower == doctest::Approx(4.0).epsilon(1e-12));
  REQUIRE(c.certified_upper.has_value());
  CHECK(*c.certified_upper == doctest::Approx(4.0).epsilon(1e-12));

  // dual ball of lp(inf) is the cross-polytope; on its edge (a, 1-a) the form
  // is -3a² + 2a + 2, peaking at a = 1/3
  auto x = operator_norm(form2(1, 3, 2), NormSpec::lp(Exponent::infinity(), 2));
  CHECK(x.lower == doctest::Approx(7.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("ascent lower bound never exceeds the certificate") {
  RandomStream rng(22);
  for (double p : {1.0, 2.0}) {
    for (int trial = 0; trial < 40; ++trial) {
      int d = 2 + trial % 4;
      auto v = random_form(d, rng);
      auto b = operator_norm(v, NormSpec::lp(p, d));
      REQUIRE(b.certified_upper.has_value());
      CHECK(b.lower <= *b.certified_upper * (1 + 1e-10) + 1e-12);
      // the maximizer lies in the dual unit ball and attains the lower bound
      CHECK(dual_norm(NormSpec::lp(p, d), b.maximizer) <= 1 + 1e-9);
      CHECK(std::abs(v(b.maximizer, b.maximizer)) == doctest::Approx(b.lower).epsilon(1e-9));
    }
  }
  for (int trial = 0; trial < 40; ++trial) {
    int d = 2 + trial % 4;
    auto v = random_form(d, rng);
    auto b = operator_norm(v, NormSpec::lp(Exponent::infinity(), d));
    if (b.certified_upper) CHECK(b.lower <= *b.certified_upper * (1 + 1e-10) + 1e-12);
  }
}

TEST_CASE("vertiii norm") {
  CHECK(vertiii_norm(SymBilinearForm::identity(2)) == doctest::Approx(6.0));
  CHECK(vertiii_norm(SymBilinearForm::zero(3)) == 0.0);
}

TEST_CASE("vertiii and operator norm are equivalent up to d-dependent factors") {
  RandomStream rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    int d = 1 + trial % 6;
    auto v = random_form(d, rng);
    auto b = operator_norm(v, NormSpec::lp(2.0, d));
    double ratio = vertiii_norm(v) / b.lower;
    double c = 40.0 * d * d;
    CHECK(ratio >= 1.0 / c);
    CHECK(ratio <= c);
  }
}

TEST_CASE("psd ordering") {
  auto i2 = SymBilinearForm::identity(2);
  CHECK(psd_gap(2.0 * i2, i2) == doctest::Approx(1.0));
  CHECK(psd_gap(i2, 2.0 * i2) == doctest::Approx(-1.0));
  CHECK(min_eigenvalue(form2(2, 0, -3)) == doctest::Approx(-3.0));
  CHECK(is_psd(SymBilinearForm::rank_one(Eigen::Vector3d(1, 2, 3))));
  CHECK_FALSE(is_psd(form2(0, 1, 0)));
}
