#include <doctest.h>

#include <cmath>

#include "bdglab/martingales.hpp"
#include "bdglab/quadvar.hpp"
#include "bdglab/random.hpp"

using namespace bdglab;

namespace {

MartingalePath straight_line(int steps, const Eigen::VectorXd& slope) {
  MartingalePath m;
  for (int k = 0; k <= steps; ++k) {
    double t = static_cast<double>(k) / steps;
    m.times.push_back(t);
    m.values.push_back(t * slope);
  }
  return m;
}

}  // namespace

TEST_CASE("single step gives the outer product") {
  Eigen::Vector3d x(1, -2, 4);
  auto t = make_constant_tree(1, x);
  for (const auto& m : enumerate_paths(t))
    CHECK(covariation_form(m).matrix() == (x * x.transpose()));
}

TEST_CASE("quadratic evaluation matches the partition sum") {
  RandomStream rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = gen_gaussian_walk(20, {SymBilinearForm::identity(3)}, rng);
    for (std::size_t k : {std::size_t{0}, std::size_t{7}, std::size_t{20}}) {
      auto v = covariation_form(m, k);
      for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd xs = rng.normal_vector(3);
        double ref = 0.0;
        for (std::size_t i = 1; i <= k; ++i) ref += std::pow(m.increment(i).dot(xs), 2);
        CHECK(v(xs, xs) == doctest::Approx(ref).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("real valued path gives the classical sum") {
  MartingalePath m;
  m.times = {0, 1, 2, 3};
  for (double v : {0.0, 1.0, -1.0, 0.5}) m.values.push_back(Eigen::VectorXd::Constant(1, v));
  CHECK(covariation_form(m).matrix()(0, 0) == doctest::Approx(1 + 4 + 2.25));
}

TEST_CASE("covariation process") {
  RandomStream rng(62);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = gen_gaussian_walk(16, {SymBilinearForm::identity(4)}, rng);
    auto p = covariation_process(m);
    REQUIRE(p.forms.size() == m.values.size());
    CHECK(p.forms.front().matrix().norm() == 0.0);
    CHECK(p.forms.back().matrix().isApprox(covariation_form(m).matrix()));
    CHECK(min_increment_gap(p) >= -1e-10);
    for (std::size_t k = 1; k < p.forms.size(); ++k) {
      Eigen::MatrixXd step = p.forms[k].matrix() - p.forms[k - 1].matrix();
      Eigen::VectorXd d = m.increment(k);
      CHECK((step - d * d.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  auto zero = straight_line(5, Eigen::VectorXd::Zero(2));
  for (const auto& f : covariation_process(zero).forms) CHECK(f.matrix().norm() == 0.0);
}

TEST_CASE("brownian proxy covariation has mean T") {
  RandomStream rng(63);
  const int n = 10000;
  const double horizon = 1.5;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = covariation_form(gen_brownian_proxy(64, 1, horizon, rng)).matrix()(0, 0);
    s += v;
    s2 += v * v;
  }
  double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  CHECK(std::abs(mean - horizon) < 4.0 * se);
}

TEST_CASE("pairwise covariation and polarization") {
  RandomStream rng(64);
  for (int trial = 0; trial < 50; ++trial) {
    auto m = gen_gaussian_walk(12, {SymBilinearForm::identity(2)}, rng);
    auto n = gen_gaussian_walk(12, {SymBilinearForm::identity(2)}, rng);
    auto mm = pairwise_covariation(m, m, 12);
    CHECK(mm.isApprox(covariation_form(m).matrix()));
    MartingalePath neg = m, sum = m, diff = m;
    for (std::size_t k = 0; k < m.values.size(); ++k) {
      neg.values[k] = -m.values[k];
      sum.values[k] = m.values[k] + n.values[k];
      diff.values[k] = m.values[k] - n.values[k];
    }
    CHECK(pairwise_covariation(m, neg, 12).isApprox(-mm));
    Eigen::MatrixXd mn = pairwise_covariation(m, n, 12);
    Eigen::MatrixXd polar =
        0.25 * (covariation_form(sum).matrix() - covariation_form(diff).matrix());
    Eigen::MatrixXd sym = 0.5 * (mn + mn.transpose());
    CHECK((polar - sym).cwiseAbs().maxCoeff() < 1e-10);
  }
  auto a = gen_gaussian_walk(4, {SymBilinearForm::identity(1)}, rng, 1.0);
  auto b = gen_gaussian_walk(4, {SymBilinearForm::identity(1)}, rng, 0.5);
  CHECK_THROWS(pairwise_covariation(a, b, 4));
}

TEST_CASE("compound poisson covariation is the sum over jumps") {
  RandomStream rng(65);
  JumpSampler law = [](RandomStream& r) { return r.normal_vector(2); };
  for (int trial = 0; trial < 200; ++trial) {
    auto m = gen_compound_poisson(4.0, 1.0, law, 32, rng);
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(2, 2);
    for (const auto& j : m.jumps->sizes) ref += j * j.transpose();
    CHECK((covariation_form(m).matrix() - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((jump_covariation(m).matrix() - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("refinement of the fine grid is exact") {
  RandomStream rng(66);
  auto m = gen_brownian_proxy(256, 1, 1.0, rng);
  auto err = refinement_convergence(m, {m.times}, Eigen::VectorXd::Ones(1));
  CHECK(err.at(0) == 0.0);
}

TEST_CASE("refinement error shrinks with denser subgrids") {
  RandomStream rng(67);
  const int n = 2000;
  std::vector<double> mean(3, 0.0);
  for (int i = 0; i < n; ++i) {
    auto m = gen_brownian_proxy(512, 1, 1.0, rng);
    auto err = refinement_convergence(
        m, {dyadic_subgrid(m, 3), dyadic_subgrid(m, 2), dyadic_subgrid(m, 1)},
        Eigen::VectorXd::Ones(1));
    for (int j = 0; j < 3; ++j) mean[j] += err[j] / n;
  }
  CHECK(mean[0] > mean[1]);
  CHECK(mean[1] > mean[2]);
}

TEST_CASE("straight line sums decrease under refinement") {
  auto line = straight_line(64, Eigen::Vector2d(1, 2));
  Eigen::VectorXd xs = Eigen::Vector2d(1, 1);
  auto err = refinement_convergence(
      line, {dyadic_subgrid(line, 4), dyadic_subgrid(line, 3), dyadic_subgrid(line, 2)}, xs);
  CHECK(err[0] > err[1]);
  CHECK(err[1] > err[2]);
}

TEST_CASE("non nested coarsenings are rejected") {
  RandomStream rng(68);
  auto m = gen_brownian_proxy(64, 1, 1.0, rng);
  CHECK_THROWS(refinement_convergence(m, {{0.0, 0.3333, 1.0}}, Eigen::VectorXd::Ones(1)));
  CHECK_THROWS(refinement_convergence(m, {{0.0, 0.5}}, Eigen::VectorXd::Ones(1)));
}

TEST_CASE("contraction transforms are dominated in every direction") {
  RandomStream rng(69);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = gen_gaussian_walk(10, {SymBilinearForm::identity(3)}, rng);
    std::vector<double> a;
    for (int k = 0; k < 10; ++k) a.push_back(2.0 * rng.uniform() - 1.0);
    auto n = apply_transform(m, PredictableTransform::scalars(a));
    CHECK(psd_gap(covariation_form(m), covariation_form(n)) >= -1e-10);
  }
}

TEST_CASE("covariation csv") {
  auto t = make_constant_tree(2, Eigen::Vector2d(1, 2));
  auto csv = covariation_to_csv({covariation_process(t.path(1))});
  CHECK(csv.rfind("replication,k,m_1_1,m_1_2,m_2_1,m_2_2\n", 0) == 0);
}
