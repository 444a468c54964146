#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bdglab/bilinear.hpp"
#include "bdglab/random.hpp"

namespace bdglab {

enum class Family { paley_walsh, gaussian_walk, brownian_proxy, compound_poisson, transformed };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

/// Jumps of a piecewise-constant (or jump + drift) path: the step index at
/// whose right endpoint each jump happens and its exact size.
struct JumpRecord {
  std::vector<std::size_t> steps;
  std::vector<Eigen::VectorXd> sizes;
};

/// A path on a finite grid t_0 = 0 < … < t_K with values[0] = 0.
struct MartingalePath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  Family family = Family::gaussian_walk;
  std::optional<JumpRecord> jumps;

  int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  Eigen::VectorXd increment(std::size_t k) const;  // values[k] - values[k-1], 1 ≤ k ≤ K
  const Eigen::VectorXd& terminal() const { return values.back(); }
};

/// A Paley–Walsh martingale on a dyadic tree of the given depth.
///
/// Node (level n, prefix π) carries an increment v(n, π); the path steps by
/// +v on an up-branch and -v on a down-branch, so both branches average to
/// zero exactly. Prefix bits are the first n branch choices, earliest in the
/// most significant position; a leaf index is the full depth-bit prefix.
class DyadicTree {
 public:
  using IncrementFn = std::function<Eigen::VectorXd(int level, std::uint64_t prefix)>;

  static constexpr int kMaxExhaustiveDepth = 14;
  static constexpr int kMaxSampledDepth = 20;

  DyadicTree(int depth, int dim, const IncrementFn& increments);

  int depth() const { return depth_; }
  int dim() const { return dim_; }
  std::uint64_t leaves() const { return std::uint64_t{1} << depth_; }
  double leaf_weight() const;

  Eigen::VectorXd node_increment(int level, std::uint64_t prefix) const;

  // +1 if leaf takes the up-branch at `level`, else -1.
  double branch_sign(std::uint64_t leaf, int level) const;
  std::uint64_t prefix_of(std::uint64_t leaf, int level) const { return leaf >> (depth_ - level); }

  MartingalePath path(std::uint64_t leaf) const;

 private:
  int depth_;
  int dim_;
  std::vector<std::vector<Eigen::VectorXd>> table_;  // table_[level][prefix]
  IncrementFn lazy_;  // used beyond the materialization cap
};

/// Tree whose node increments are i.i.d. N(0, scale²·I_d), generated by a
/// counter-based hash of (tree_seed, level, prefix).
DyadicTree make_paley_walsh_tree(int depth, int dim, double increment_scale,
                                 std::uint64_t tree_seed);

/// Tree stepping ±x at every node.
DyadicTree make_constant_tree(int depth, const Eigen::VectorXd& x);

/// All 2^depth leaf paths in leaf order, each of weight 2^{-depth}.
/// Throws when depth exceeds kMaxExhaustiveDepth.
std::vector<MartingalePath> enumerate_paths(const DyadicTree& tree);

/// One path through a uniformly drawn leaf.
MartingalePath sample_path(const DyadicTree& tree, RandomStream& rng);

/// A tree whose increment at each node is factor(level, prefix)·v(level, prefix).
DyadicTree transform_tree(const DyadicTree& tree,
                          const std::function<double(int level, std::uint64_t prefix)>& factor);

/// Max over nodes of |weighted conditional mean of the next increment| for
/// leaf paths listed in leaf order (0 for a martingale, up to rounding).
double tree_martingale_defect(const std::vector<MartingalePath>& leaves, int depth);

/// Empirical conditional means of the increment at `step` given the sign of
/// the first coordinate of the value before it, in units of standard errors.
struct EmpiricalMartingaleCheck {
  double max_abs_z = 0.0;
  std::size_t bins_used = 0;
};
EmpiricalMartingaleCheck empirical_martingale_check(const std::vector<MartingalePath>& paths,
                                                    std::size_t step);

/// Independent N(0, Σ_k) increments on the grid t_k = k·dt. `covariances`
/// holds one form per step or a single form reused for every step.
MartingalePath gen_gaussian_walk(int steps, const std::vector<SymBilinearForm>& covariances,
                                 RandomStream& rng, double dt = 1.0);

/// Gaussian walk with Σ_k = (T/K)·I_d; requires K ≥ 64.
MartingalePath gen_brownian_proxy(int steps, int dim, double horizon, RandomStream& rng);

using JumpSampler = std::function<Eigen::VectorXd(RandomStream&)>;

/// Symmetrized compound Poisson path on [0, T]: jump times of a rate-λ
/// Poisson process, each jump ±J with probability ½ (J from `jump_law`).
/// The grid is the union of the uniform grid with `grid_steps` steps and the
/// jump times; values are constant between jumps.
MartingalePath gen_compound_poisson(double rate, double horizon, const JumpSampler& jump_law,
                                    int grid_steps, RandomStream& rng);

/// Per-step factors a_k for the increment ending at step k. A factor may
/// depend on values[0..k-1] only: the callback never sees later values.
class PredictableTransform {
 public:
  using FactorFn = std::function<double(std::size_t step, std::span<const Eigen::VectorXd> history)>;

  static PredictableTransform signs(std::vector<int> eps);
  static PredictableTransform scalars(std::vector<double> factors, bool contractive = true);
  static PredictableTransform adapted(FactorFn fn, bool contractive = true);

  double factor(std::size_t step, std::span<const Eigen::VectorXd> history) const;
  bool contractive() const { return contractive_; }
  std::optional<std::size_t> fixed_length() const { return fixed_length_; }

 private:
  FactorFn fn_;
  bool contractive_ = true;
  std::optional<std::size_t> fixed_length_;
};

/// Replaces increment d_k with a_k·d_k (jump sizes likewise).
MartingalePath apply_transform(const MartingalePath& m, const PredictableTransform& transform);

/// CSV rows "replication,k,t_k,v_1..v_d" (header included when requested).
std::string paths_to_csv(const std::vector<MartingalePath>& paths, bool header = true);

}  // namespace bdglab
