#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bdglab/martingales.hpp"
#include "bdglab/quadvar.hpp"
#include "bdglab/random.hpp"

using namespace bdglab;

TEST_CASE("depth one tree") {
  auto t = make_constant_tree(1, Eigen::Vector2d(1, -1));
  auto paths = enumerate_paths(t);
  REQUIRE(paths.size() == 2);
  CHECK(t.leaf_weight() == 0.5);
  CHECK((paths[0].terminal() + paths[1].terminal()).norm() == 0.0);
  CHECK(paths[0].terminal().cwiseAbs().isApprox(Eigen::Vector2d(1, 1)));
  CHECK(paths[0].values[0].norm() == 0.0);
}

TEST_CASE("terminal values of a deep tree average to zero") {
  auto t = make_paley_walsh_tree(12, 3, 1.0, 7);
  auto paths = enumerate_paths(t);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  for (const auto& m : paths) sum += m.terminal();
  CHECK(sum.cwiseAbs().maxCoeff() * t.leaf_weight() < 1e-12);
  CHECK(tree_martingale_defect(paths, 12) < 1e-12);
}

TEST_CASE("prefixes put the first branch in the top bit") {
  auto t = make_paley_walsh_tree(4, 1, 1.0, 3);
  const std::uint64_t leaf = 0b1010;
  CHECK(t.prefix_of(leaf, 0) == 0);
  CHECK(t.prefix_of(leaf, 1) == 1);
  CHECK(t.prefix_of(leaf, 3) == 0b101);
  auto m = t.path(leaf);
  for (int level = 0; level < 4; ++level) {
    Eigen::VectorXd expected =
        t.branch_sign(leaf, level) * t.node_increment(level, t.prefix_of(leaf, level));
    CHECK(m.increment(level + 1).isApprox(expected));
  }
}

TEST_CASE("sampled paths agree with enumerated ones") {
  auto t = make_paley_walsh_tree(8, 2, 0.5, 9);
  auto all = enumerate_paths(t);
  RandomStream rng(51);
  for (int i = 0; i < 50; ++i) {
    auto m = sample_path(t, rng);
    bool found = false;
    for (const auto& e : all)
      if ((e.terminal() - m.terminal()).norm() == 0.0 && e.values == m.values) found = true;
    CHECK(found);
  }
}

TEST_CASE("tree depth limits") {
  CHECK_THROWS(enumerate_paths(make_paley_walsh_tree(15, 1, 1.0, 1)));
  CHECK_THROWS(make_paley_walsh_tree(21, 1, 1.0, 1));
  auto deep = make_paley_walsh_tree(18, 1, 1.0, 1);
  RandomStream rng(52);
  CHECK(sample_path(deep, rng).steps() == 18);
}

TEST_CASE("gaussian walk covariance") {
  Eigen::Matrix2d s;
  s << 2, 0.5, 0.5, 1;
  SymBilinearForm cov(s);
  const int n = 20000, steps = 4;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  RandomStream rng(53);
  for (int i = 0; i < n; ++i) {
    auto m = gen_gaussian_walk(steps, {cov}, rng);
    mean += m.terminal();
    acc += m.terminal() * m.terminal().transpose();
  }
  mean /= n;
  acc /= n;
  Eigen::Matrix2d expected = steps * s;
  // entrywise standard error of a sample covariance: sqrt((s_ii s_jj + s_ij²)/n)
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(mean(i)) < 4.0 * std::sqrt(expected(i, i) / n));
    for (int j = 0; j < 2; ++j) {
      double se = std::sqrt((expected(i, i) * expected(j, j) + expected(i, j) * expected(i, j)) / n);
      CHECK(std::abs(acc(i, j) - expected(i, j)) < 4.0 * se);
    }
  }
}

TEST_CASE("brownian proxy quadratic variation") {
  const int d = 3, steps = 128, n = 400;
  const double horizon = 2.0;
  RandomStream rng(54);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto m = gen_brownian_proxy(steps, d, horizon, rng);
    CHECK(m.family == Family::brownian_proxy);
    CHECK(m.times.back() == doctest::Approx(horizon));
    double q = covariation_form(m).matrix().trace();
    sum += q;
    sum2 += q * q;
  }
  double mean = sum / n;
  double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
  CHECK(std::abs(mean - d * horizon) < 4.0 * se);
  CHECK_THROWS(gen_brownian_proxy(32, 1, 1.0, rng));
}

TEST_CASE("compound poisson jump count and exact jumps") {
  const double rate = 3.0, horizon = 2.0;
  const int n = 4000;
  RandomStream rng(55);
  JumpSampler law = [](RandomStream& r) {
    Eigen::VectorXd j(1);
    j(0) = 1.0 + r.uniform();
    return j;
  };
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    auto m = gen_compound_poisson(rate, horizon, law, 16, rng);
    REQUIRE(m.jumps.has_value());
    total += static_cast<double>(m.jumps->steps.size());
    for (std::size_t k = 0; k < m.jumps->steps.size(); ++k)
      CHECK(m.increment(m.jumps->steps[k]).isApprox(m.jumps->sizes[k]));
    CHECK(covariation_form(m).matrix().isApprox(jump_covariation(m).matrix()));
  }
  double mean = total / n;
  CHECK(std::abs(mean - rate * horizon) < 4.0 * std::sqrt(rate * horizon / n));
}

TEST_CASE("sign transforms") {
  RandomStream rng(56);
  auto m = gen_gaussian_walk(10, {SymBilinearForm::identity(2)}, rng);
  auto same = apply_transform(m, PredictableTransform::signs(std::vector<int>(10, 1)));
  CHECK(same.values == m.values);
  auto neg = apply_transform(m, PredictableTransform::signs(std::vector<int>(10, -1)));
  for (std::size_t k = 0; k < m.values.size(); ++k) CHECK(neg.values[k] == -m.values[k]);
  CHECK(covariation_form(neg).matrix().isApprox(covariation_form(m).matrix()));
  CHECK(neg.family == Family::transformed);
  CHECK_THROWS(apply_transform(m, PredictableTransform::signs(std::vector<int>(3, 1))));
}

TEST_CASE("covariation of a tree is invariant under predictable signs") {
  auto t = make_paley_walsh_tree(10, 2, 1.0, 11);
  RandomStream rng(57);
  auto paths = enumerate_paths(t);
  for (int trial = 0; trial < 3; ++trial) {
    auto transform = PredictableTransform::adapted(
        [salt = rng.next_u64()](std::size_t step, std::span<const Eigen::VectorXd> history) {
          double h = history.back().sum();
          return (mix_keys(salt, step) ^ static_cast<std::uint64_t>(std::abs(h) * 1e6)) & 1 ? 1.0
                                                                                            : -1.0;
        });
    for (std::size_t i = 0; i < paths.size(); i += 37) {
      auto n = apply_transform(paths[i], transform);
      CHECK((covariation_form(n).matrix() - covariation_form(paths[i]).matrix())
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("defect checker flags a non-martingale") {
  auto t = make_paley_walsh_tree(4, 1, 1.0, 5);
  auto paths = enumerate_paths(t);
  CHECK(tree_martingale_defect(paths, 4) < 1e-14);
  for (auto& m : paths)
    for (std::size_t k = 1; k < m.values.size(); ++k) m.values[k](0) += 0.1 * k;
  CHECK(tree_martingale_defect(paths, 4) == doctest::Approx(0.1));
}

TEST_CASE("transformed trees remain martingales") {
  auto t = make_paley_walsh_tree(8, 2, 1.0, 13);
  auto u = transform_tree(t, [](int level, std::uint64_t prefix) {
    return (level + prefix) % 3 == 0 ? -0.5 : 1.0;
  });
  CHECK(tree_martingale_defect(enumerate_paths(u), 8) < 1e-12);
}

TEST_CASE("transform factors only see the past") {
  RandomStream rng(58);
  auto m = gen_gaussian_walk(6, {SymBilinearForm::identity(1)}, rng);
  auto transform = PredictableTransform::adapted(
      [&](std::size_t step, std::span<const Eigen::VectorXd> history) {
        CHECK(history.size() == step);
        for (std::size_t j = 0; j < history.size(); ++j) CHECK(history[j] == m.values[j]);
        return 1.0;
      });
  apply_transform(m, transform);
  CHECK_THROWS(PredictableTransform::scalars(std::vector<double>(6, 2.0), true));
  auto late = PredictableTransform::adapted([](std::size_t, auto) { return 1.5; });
  CHECK_THROWS(apply_transform(m, late));
  auto big = PredictableTransform::scalars(std::vector<double>(6, 2.0), false);
  CHECK(apply_transform(m, big).terminal()(0) == doctest::Approx(2.0 * m.terminal()(0)));
}

TEST_CASE("empirical martingale check on a gaussian walk") {
  RandomStream rng(59);
  std::vector<MartingalePath> paths;
  for (int i = 0; i < 4000; ++i) paths.push_back(gen_gaussian_walk(5, {SymBilinearForm::identity(2)}, rng));
  auto c = empirical_martingale_check(paths, 3);
  CHECK(c.bins_used == 2);
  CHECK(c.max_abs_z < 4.0);
}

TEST_CASE("paths csv") {
  auto t = make_constant_tree(2, Eigen::Vector2d(1, 2));
  auto csv = paths_to_csv({t.path(0)});
  CHECK(csv.rfind("replication,k,t_k,v_1,v_2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("family names round trip") {
  for (auto f : {Family::paley_walsh, Family::gaussian_walk, Family::brownian_proxy,
                 Family::compound_poisson, Family::transformed})
    CHECK(family_from_string(to_string(f)) == f);
  CHECK_THROWS(family_from_string("levy"));
}
