#include <doctest.h>

#include <cmath>

#include "bdglab/martingales.hpp"
#include "bdglab/quadvar.hpp"
#include "bdglab/random.hpp"
#include "bdglab/stochint.hpp"

using namespace bdglab;

namespace {

std::vector<double> uniform_breaks(int n, double horizon) {
  std::vector<double> b;
  for (int i = 0; i <= n; ++i) b.push_back(horizon * i / n);
  return b;
}

Eigen::MatrixXd random_block(int r, int c, RandomStream& rng) {
  Eigen::MatrixXd a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = rng.normal();
  return a;
}

MarkedJumpProcess single_mark(double rate, double horizon, const Eigen::VectorXd& x,
                              RandomStream& rng) {
  MarkedJumpProcess p;
  p.horizon = horizon;
  p.intensities = {rate};
  p.breakpoints = {0.0, horizon};
  p.values = {{x}};
  p.events = simulate_marked_jumps(p.intensities, horizon, rng);
  return p;
}

}  // namespace

TEST_CASE("pathwise q has unit trace") {
  RandomStream rng(71);
  auto drv = make_driver_brownian(3, 64, 1.0, rng);
  for (std::size_t k = 1; k <= drv.steps(); ++k) {
    CHECK(drv.q[k].trace() == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::VectorXd d = drv.path.increment(k);
    CHECK((drv.q[k] * drv.qv_increments[k] - d * d.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(drv.path.family == Family::brownian_proxy);
  auto scalar = make_driver_brownian(1, 64, 1.0, rng);
  for (std::size_t k = 1; k <= scalar.steps(); ++k) CHECK(scalar.q[k](0, 0) == 1.0);
}

TEST_CASE("ensemble q") {
  RandomStream rng(72);
  auto drv = make_driver_brownian(4, 64, 2.0, rng, QuadVarMode::ensemble);
  for (std::size_t k = 1; k <= drv.steps(); ++k) {
    CHECK(drv.q[k].isApprox(0.25 * Eigen::MatrixXd::Identity(4, 4)));
    CHECK(drv.qv_increments[k] == doctest::Approx(4.0 * 2.0 / 64));
  }
  CHECK(drv.qv(64) == doctest::Approx(8.0));
}

TEST_CASE("driver quadratic variation has mean kT") {
  RandomStream rng(73);
  const int n = 2000, k = 3;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = make_driver_brownian(k, 64, 1.5, rng).qv(64);
    s += v;
    s2 += v * v;
  }
  double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  CHECK(std::abs(mean - k * 1.5) < 4.0 * se);
}

TEST_CASE("constant integrand against a scalar driver") {
  RandomStream rng(74);
  auto drv = make_driver_brownian(1, 64, 1.0, rng);
  Eigen::MatrixXd x(3, 1);
  x << 1, -2, 0.5;
  auto phi = ElementaryProcess::constant({0.0, 1.0}, {x});
  auto out = integrate(phi, drv);
  for (std::size_t k = 0; k < out.values.size(); ++k)
    CHECK((out.values[k] - x.col(0) * drv.path.values[k](0)).cwiseAbs().maxCoeff() < 1e-14);
  auto form = integrand_form(phi, drv);
  CHECK((form.matrix() - x * x.transpose() * drv.qv(64)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero integrand") {
  RandomStream rng(75);
  auto drv = make_driver_brownian(2, 64, 1.0, rng);
  auto phi = ElementaryProcess::zero(3, 2, 1.0);
  for (const auto& v : integrate(phi, drv).values) CHECK(v.norm() == 0.0);
  CHECK(integrand_form(phi, drv).matrix().norm() == 0.0);
}

TEST_CASE("two block integrand matches the telescoping sum") {
  RandomStream rng(76);
  auto drv = make_driver_brownian(2, 64, 1.0, rng);
  Eigen::MatrixXd a = random_block(3, 2, rng), b = random_block(3, 2, rng);
  auto phi = ElementaryProcess::constant({0.0, 0.25, 0.75}, {a, b});
  auto out = integrate(phi, drv);
  const auto& w = drv.path.values;
  // grid index 16 is t = 0.25, 48 is t = 0.75
  Eigen::VectorXd expected = a * (w[16] - w[0]) + b * (w[48] - w[16]);
  CHECK((out.values[40] - (a * (w[16] - w[0]) + b * (w[40] - w[16]))).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((out.terminal() - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((out.values[64] - out.values[48]).norm() == 0.0);
}

TEST_CASE("integration is linear") {
  RandomStream rng(77);
  auto drv = make_driver_brownian(2, 64, 1.0, rng);
  auto phi = ElementaryProcess::constant({0.0, 0.5, 1.0},
                                         {random_block(2, 2, rng), random_block(2, 2, rng)});
  auto psi = ElementaryProcess::constant({0.0, 0.125, 0.625},
                                         {random_block(2, 2, rng), random_block(2, 2, rng)});
  CHECK((phi + psi).breakpoints().size() == 5);
  auto a = integrate(phi + psi, drv), b = integrate(phi, drv), c = integrate(psi, drv);
  for (std::size_t k = 0; k < a.values.size(); ++k)
    CHECK((a.values[k] - b.values[k] - c.values[k]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("integrand form equals covariation of the integral") {
  RandomStream rng(78);
  for (int trial = 0; trial < 50; ++trial) {
    auto drv = make_driver_brownian(3, 64, 1.0, rng);
    auto phi = ElementaryProcess::predictable(
        uniform_breaks(4, 1.0), 2, 3,
        [&, salt = rng.normal()](std::size_t i, std::span<const Eigen::VectorXd> h) {
          Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, 3, salt);
          m(0, i % 3) += h.back().sum();
          return m;
        });
    auto out = integrate(phi, drv);
    Eigen::MatrixXd diff = covariation_form(out).matrix() - integrand_form(phi, drv).matrix();
    CHECK(diff.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("expected integrand form for a scalar brownian driver") {
  RandomStream rng(79);
  Eigen::MatrixXd x(2, 1);
  x << 1, 3;
  auto phi = ElementaryProcess::constant({0.0, 0.5}, {x});
  const int n = 4000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto drv = make_driver_brownian(1, 64, 1.0, rng);
    double v = integrand_form(phi, drv)(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0));
    s += v;
    s2 += v * v;
  }
  double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  CHECK(std::abs(mean - 0.5) < 4.0 * se);
}

TEST_CASE("predictable integrands only see the past") {
  RandomStream rng(80);
  auto drv = make_driver_brownian(1, 64, 1.0, rng);
  auto phi = ElementaryProcess::predictable(
      {0.0, 0.25, 0.5, 1.0}, 1, 1, [&](std::size_t i, std::span<const Eigen::VectorXd> h) {
        const double left[] = {0.0, 0.25, 0.5};
        CHECK(h.size() == static_cast<std::size_t>(left[i] * 64) + 1);
        return Eigen::MatrixXd::Ones(1, 1);
      });
  integrate(phi, drv);
}

TEST_CASE("predictable integral on a tree is a martingale") {
  const int depth = 8;
  auto tree = make_paley_walsh_tree(depth, 2, 1.0, 5);
  auto phi = ElementaryProcess::predictable(
      uniform_breaks(depth, depth), 3, 2, [](std::size_t i, std::span<const Eigen::VectorXd> h) {
        Eigen::MatrixXd m(3, 2);
        double s = h.back()(0) >= 0 ? 1.0 : -2.0;
        m << s, 0.5, static_cast<double>(i), h.back()(1), 1.0, -s;
        return m;
      });
  std::vector<MartingalePath> leaves;
  for (const auto& p : enumerate_paths(tree)) leaves.push_back(integrate(phi, make_driver(p)));
  CHECK(tree_martingale_defect(leaves, depth) < 1e-12);
}

TEST_CASE("breakpoints off the driver grid are rejected") {
  RandomStream rng(81);
  auto drv = make_driver_brownian(1, 64, 1.0, rng);
  auto phi = ElementaryProcess::constant({0.0, 0.3, 1.0},
                                         {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)});
  CHECK_THROWS(integrate(phi, drv));
  auto wrong = ElementaryProcess::constant({0.0, 1.0}, {Eigen::MatrixXd::Ones(1, 2)});
  CHECK_THROWS(integrate(wrong, drv));
}

TEST_CASE("poisson integral of a constant integrand") {
  RandomStream rng(82);
  Eigen::Vector2d x(1, -2);
  const double rate = 3.0, horizon = 2.0;
  const int n = 4000;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto p = single_mark(rate, horizon, x, rng);
    auto r = poisson_integrate(p, horizon);
    double jumps = static_cast<double>(p.events.size());
    CHECK((r.path.terminal() - (jumps - rate * horizon) * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.form.matrix() - jumps * x * x.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((jump_covariation(r.path).matrix() - r.form.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    mean += r.path.terminal() / n;
    double v = r.form(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1));
    s += v;
    s2 += v * v;
  }
  // Var(N_t x) = λt xxᵀ
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(mean(i)) < 4.0 * std::sqrt(rate * horizon * x(i) * x(i) / n));
  double m = s / n, se = std::sqrt((s2 / n - m * m) / (n - 1));
  CHECK(std::abs(m - rate * horizon * std::pow(x.sum(), 2)) < 4.0 * se);
}

TEST_CASE("poisson integral without jumps") {
  MarkedJumpProcess p;
  p.horizon = 1.0;
  p.intensities = {2.0, 0.5};
  p.breakpoints = {0.0, 0.5, 1.0};
  p.values = {{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)},
              {Eigen::Vector2d(2, 2), Eigen::Vector2d(-1, 0)}};
  auto r = poisson_integrate(p, 1.0);
  CHECK(r.form.matrix().norm() == 0.0);
  // compensator: 0.5·(2·(1,0) + 0.5·(2,2)) + 0.5·(2·(0,1) + 0.5·(-1,0))
  Eigen::Vector2d drift = 0.5 * Eigen::Vector2d(3, 1) + 0.5 * Eigen::Vector2d(-0.5, 2);
  CHECK((r.path.terminal() + drift).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS(poisson_integrate(p, 1.5));
}

TEST_CASE("marked jump simulation") {
  RandomStream rng(83);
  const int n = 2000;
  std::vector<double> counts(2, 0.0);
  for (int i = 0; i < n; ++i) {
    auto ev = simulate_marked_jumps({1.0, 4.0}, 0.5, rng);
    for (std::size_t j = 1; j < ev.size(); ++j) CHECK(ev[j - 1].time <= ev[j].time);
    for (const auto& e : ev) counts[e.mark] += 1.0 / n;
  }
  CHECK(std::abs(counts[0] - 0.5) < 4.0 * std::sqrt(0.5 / n));
  CHECK(std::abs(counts[1] - 2.0) < 4.0 * std::sqrt(2.0 / n));
}
