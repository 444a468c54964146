#include "bdglab/martingales.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bdglab/errors.hpp"
#include "bdglab/gaussian.hpp"

namespace bdglab {

std::string to_string(Family f) {
  switch (f) {
    case Family::paley_walsh: return "paley_walsh";
    case Family::gaussian_walk: return "gaussian_walk";
    case Family::brownian_proxy: return "brownian_proxy";
    case Family::compound_poisson: return "compound_poisson";
    case Family::transformed: return "transformed";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::paley_walsh, Family::gaussian_walk, Family::brownian_proxy,
                   Family::compound_poisson, Family::transformed}) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown martingale family: " + name);
}

Eigen::VectorXd MartingalePath::increment(std::size_t k) const {
  if (k == 0 || k >= values.size()) throw std::out_of_range("MartingalePath::increment");
  return values[k] - values[k - 1];
}

DyadicTree::DyadicTree(int depth, int dim, const IncrementFn& increments)
    : depth_(depth), dim_(dim) {
  if (depth < 0 || depth > kMaxSampledDepth) {
    throw std::invalid_argument("DyadicTree: depth must lie in [0, " +
                                std::to_string(kMaxSampledDepth) + "]");
  }
  if (dim < 1) throw std::invalid_argument("DyadicTree: dim must be positive");
  if (depth <= kMaxExhaustiveDepth) {
    table_.resize(static_cast<std::size_t>(depth));
    for (int level = 0; level < depth; ++level) {
      auto& row = table_[static_cast<std::size_t>(level)];
      row.reserve(std::size_t{1} << level);
      for (std::uint64_t prefix = 0; prefix < (std::uint64_t{1} << level); ++prefix) {
        Eigen::VectorXd v = increments(level, prefix);
        require_dim("DyadicTree increment", dim, v.size());
        row.push_back(std::move(v));
      }
    }
  } else {
    lazy_ = increments;
  }
}

double DyadicTree::leaf_weight() const { return std::ldexp(1.0, -depth_); }

Eigen::VectorXd DyadicTree::node_increment(int level, std::uint64_t prefix) const {
  if (!table_.empty() || depth_ == 0) {
    return table_.at(static_cast<std::size_t>(level)).at(prefix);
  }
  Eigen::VectorXd v = lazy_(level, prefix);
  require_dim("DyadicTree increment", dim_, v.size());
  return v;
}

double DyadicTree::branch_sign(std::uint64_t leaf, int level) const {
  return ((leaf >> (depth_ - 1 - level)) & 1U) ? 1.0 : -1.0;
}

MartingalePath DyadicTree::path(std::uint64_t leaf) const {
  MartingalePath m;
  m.family = Family::paley_walsh;
  m.times.resize(static_cast<std::size_t>(depth_) + 1);
  m.values.resize(static_cast<std::size_t>(depth_) + 1);
  m.times[0] = 0.0;
  m.values[0] = Eigen::VectorXd::Zero(dim_);
  for (int level = 0; level < depth_; ++level) {
    const auto k = static_cast<std::size_t>(level) + 1;
    m.times[k] = static_cast<double>(k);
    m.values[k] = m.values[k - 1] +
                  branch_sign(leaf, level) * node_increment(level, prefix_of(leaf, level));
  }
  return m;
}

DyadicTree make_paley_walsh_tree(int depth, int dim, double increment_scale,
                                 std::uint64_t tree_seed) {
  return DyadicTree(depth, dim, [=](int level, std::uint64_t prefix) {
    const std::uint64_t node = mix_keys(tree_seed, (std::uint64_t{1} << level) + prefix);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
      v(i) = increment_scale * hashed_normal(node, static_cast<std::uint64_t>(i));
    }
    return v;
  });
}

DyadicTree make_constant_tree(int depth, const Eigen::VectorXd& x) {
  return DyadicTree(depth, static_cast<int>(x.size()),
                    [x](int, std::uint64_t) { return x; });
}

std::vector<MartingalePath> enumerate_paths(const DyadicTree& tree) {
  if (tree.depth() > DyadicTree::kMaxExhaustiveDepth) {
    throw std::invalid_argument("enumerate_paths: depth " + std::to_string(tree.depth()) +
                                " exceeds the exhaustive cap of " +
                                std::to_string(DyadicTree::kMaxExhaustiveDepth));
  }
  std::vector<MartingalePath> paths;
  paths.reserve(tree.leaves());
  for (std::uint64_t leaf = 0; leaf < tree.leaves(); ++leaf) paths.push_back(tree.path(leaf));
  return paths;
}

MartingalePath sample_path(const DyadicTree& tree, RandomStream& rng) {
  const std::uint64_t bits = rng.next_u64();
  const std::uint64_t leaf = tree.depth() == 0 ? 0 : bits >> (64 - tree.depth());
  return tree.path(leaf);
}

DyadicTree transform_tree(const DyadicTree& tree,
                          const std::function<double(int level, std::uint64_t prefix)>& factor) {
  return DyadicTree(tree.depth(), tree.dim(), [tree, factor](int level, std::uint64_t prefix) {
    return Eigen::VectorXd(factor(level, prefix) * tree.node_increment(level, prefix));
  });
}

double tree_martingale_defect(const std::vector<MartingalePath>& leaves, int depth) {
  if (leaves.size() != (std::size_t{1} << depth)) {
    throw std::invalid_argument("tree_martingale_defect: expected 2^depth leaf paths");
  }
  double worst = 0.0;
  for (int level = 0; level < depth; ++level) {
    const std::size_t block = std::size_t{1} << (depth - level);
    for (std::size_t start = 0; start < leaves.size(); start += block) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(leaves[start].dim());
      for (std::size_t i = start; i < start + block; ++i) {
        mean += leaves[i].increment(static_cast<std::size_t>(level) + 1);
      }
      mean /= static_cast<double>(block);
      worst = std::max(worst, mean.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

EmpiricalMartingaleCheck empirical_martingale_check(const std::vector<MartingalePath>& paths,
                                                    std::size_t step) {
  EmpiricalMartingaleCheck out;
  if (paths.empty()) return out;
  const int d = paths.front().dim();
  // Two bins: first coordinate of the value before the step is >= 0 or < 0.
  std::vector<std::vector<const MartingalePath*>> bins(2);
  for (const auto& m : paths) {
    bins[m.values.at(step - 1)(0) < 0.0 ? 1 : 0].push_back(&m);
  }
  for (const auto& bin : bins) {
    if (bin.size() < 2) continue;
    ++out.bins_used;
    for (int i = 0; i < d; ++i) {
      double mean = 0.0;
      for (const auto* m : bin) mean += m->increment(step)(i);
      mean /= static_cast<double>(bin.size());
      double ss = 0.0;
      for (const auto* m : bin) {
        const double dev = m->increment(step)(i) - mean;
        ss += dev * dev;
      }
      const double se = std::sqrt(ss / static_cast<double>(bin.size() - 1) /
                                  static_cast<double>(bin.size()));
      double z = 0.0;
      if (se > 0.0) {
        z = std::abs(mean) / se;
      } else if (mean != 0.0) {
        z = std::numeric_limits<double>::infinity();
      }
      out.max_abs_z = std::max(out.max_abs_z, z);
    }
  }
  return out;
}

MartingalePath gen_gaussian_walk(int steps, const std::vector<SymBilinearForm>& covariances,
                                 RandomStream& rng, double dt) {
  if (steps < 1) throw std::invalid_argument("gen_gaussian_walk: need at least one step");
  if (covariances.size() != 1 && covariances.size() != static_cast<std::size_t>(steps)) {
    throw std::invalid_argument("gen_gaussian_walk: need one covariance or one per step");
  }
  std::vector<GaussianSampler> samplers;
  samplers.reserve(covariances.size());
  for (const auto& c : covariances) samplers.emplace_back(c);
  const int d = covariances.front().dim();

  MartingalePath m;
  m.family = Family::gaussian_walk;
  m.times.resize(static_cast<std::size_t>(steps) + 1);
  m.values.resize(static_cast<std::size_t>(steps) + 1);
  m.times[0] = 0.0;
  m.values[0] = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g;
  Eigen::VectorXd xi;
  for (int k = 1; k <= steps; ++k) {
    const auto& s = samplers[samplers.size() == 1 ? 0 : static_cast<std::size_t>(k - 1)];
    require_dim("gen_gaussian_walk", d, s.dim());
    s.sample_into(rng, g, xi);
    m.times[static_cast<std::size_t>(k)] = k * dt;
    m.values[static_cast<std::size_t>(k)] = m.values[static_cast<std::size_t>(k) - 1] + xi;
  }
  return m;
}

MartingalePath gen_brownian_proxy(int steps, int dim, double horizon, RandomStream& rng) {
  if (steps < 64) throw std::invalid_argument("gen_brownian_proxy: need at least 64 steps");
  if (dim < 1) throw std::invalid_argument("gen_brownian_proxy: dim must be positive");
  if (!(horizon >= 0.0)) throw std::invalid_argument("gen_brownian_proxy: negative horizon");
  const double dt = horizon / steps;
  const double sd = std::sqrt(dt);
  MartingalePath m;
  m.family = Family::brownian_proxy;
  m.times.resize(static_cast<std::size_t>(steps) + 1);
  m.values.resize(static_cast<std::size_t>(steps) + 1);
  m.times[0] = 0.0;
  m.values[0] = Eigen::VectorXd::Zero(dim);
  for (int k = 1; k <= steps; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    m.times[kk] = k * dt;
    m.values[kk] = m.values[kk - 1] + sd * rng.normal_vector(dim);
  }
  if (steps > 0) m.times.back() = horizon;
  return m;
}

MartingalePath gen_compound_poisson(double rate, double horizon, const JumpSampler& jump_law,
                                    int grid_steps, RandomStream& rng) {
  if (!(rate > 0.0)) throw std::invalid_argument("gen_compound_poisson: rate must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("gen_compound_poisson: horizon must be positive");
  if (grid_steps < 1) throw std::invalid_argument("gen_compound_poisson: grid_steps must be >= 1");

  std::vector<double> jump_times;
  std::vector<Eigen::VectorXd> jump_sizes;
  for (double t = rng.exponential(rate); t < horizon; t += rng.exponential(rate)) {
    Eigen::VectorXd j = jump_law(rng);
    if (rng.uniform() < 0.5) j = -j;
    jump_times.push_back(t);
    jump_sizes.push_back(std::move(j));
  }

  std::vector<double> times(static_cast<std::size_t>(grid_steps) + 1);
  for (int k = 0; k <= grid_steps; ++k) times[static_cast<std::size_t>(k)] = horizon * k / grid_steps;
  times.back() = horizon;
  times.insert(times.end(), jump_times.begin(), jump_times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  int d = 0;
  if (!jump_sizes.empty()) {
    d = static_cast<int>(jump_sizes.front().size());
  } else {
    RandomStream probe = rng.substream(0);
    d = static_cast<int>(jump_law(probe).size());
  }

  MartingalePath m;
  m.family = Family::compound_poisson;
  m.times = times;
  m.values.assign(times.size(), Eigen::VectorXd::Zero(d));
  JumpRecord record;
  std::size_t next = 0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    m.values[k] = m.values[k - 1];
    while (next < jump_times.size() && jump_times[next] == times[k]) {
      require_dim("gen_compound_poisson jump", d, jump_sizes[next].size());
      m.values[k] += jump_sizes[next];
      if (!record.steps.empty() && record.steps.back() == k) {
        record.sizes.back() += jump_sizes[next];
      } else {
        record.steps.push_back(k);
        record.sizes.push_back(jump_sizes[next]);
      }
      ++next;
    }
  }
  m.jumps = std::move(record);
  return m;
}

PredictableTransform PredictableTransform::signs(std::vector<int> eps) {
  for (int e : eps) {
    if (e != 1 && e != -1) throw std::invalid_argument("PredictableTransform: signs must be +-1");
  }
  PredictableTransform t;
  t.fixed_length_ = eps.size();
  t.fn_ = [eps = std::move(eps)](std::size_t step, std::span<const Eigen::VectorXd>) {
    return static_cast<double>(eps.at(step - 1));
  };
  return t;
}

PredictableTransform PredictableTransform::scalars(std::vector<double> factors, bool contractive) {
  if (contractive) {
    for (double a : factors) {
      if (!(std::abs(a) <= 1.0)) {
        throw std::invalid_argument("PredictableTransform: factor " + std::to_string(a) +
                                    " is not contractive");
      }
    }
  }
  PredictableTransform t;
  t.contractive_ = contractive;
  t.fixed_length_ = factors.size();
  t.fn_ = [factors = std::move(factors)](std::size_t step, std::span<const Eigen::VectorXd>) {
    return factors.at(step - 1);
  };
  return t;
}

PredictableTransform PredictableTransform::adapted(FactorFn fn, bool contractive) {
  PredictableTransform t;
  t.contractive_ = contractive;
  t.fn_ = std::move(fn);
  return t;
}

double PredictableTransform::factor(std::size_t step,
                                    std::span<const Eigen::VectorXd> history) const {
  const double a = fn_(step, history);
  if (contractive_ && !(std::abs(a) <= 1.0)) {
    throw std::invalid_argument("PredictableTransform: factor " + std::to_string(a) +
                                " at step " + std::to_string(step) + " is not contractive");
  }
  return a;
}

MartingalePath apply_transform(const MartingalePath& m, const PredictableTransform& transform) {
  const std::size_t steps = m.steps();
  if (transform.fixed_length() && *transform.fixed_length() != steps) {
    throw std::invalid_argument("apply_transform: transform has " +
                                std::to_string(*transform.fixed_length()) +
                                " factors for a path with " + std::to_string(steps) + " steps");
  }
  MartingalePath n;
  n.family = Family::transformed;
  n.times = m.times;
  n.values.resize(m.values.size());
  n.values[0] = m.values[0];
  std::vector<double> factors(steps + 1, 0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    factors[k] = transform.factor(k, std::span<const Eigen::VectorXd>(m.values.data(), k));
    n.values[k] = n.values[k - 1] + factors[k] * (m.values[k] - m.values[k - 1]);
  }
  if (m.jumps) {
    JumpRecord record = *m.jumps;
    for (std::size_t i = 0; i < record.steps.size(); ++i) {
      record.sizes[i] *= factors[record.steps[i]];
    }
    n.jumps = std::move(record);
  }
  return n;
}

std::string paths_to_csv(const std::vector<MartingalePath>& paths, bool header) {
  std::ostringstream out;
  out << std::setprecision(17);
  const int d = paths.empty() ? 0 : paths.front().dim();
  if (header) {
    out << "replication,k,t_k";
    for (int i = 1; i <= d; ++i) out << ",v_" << i;
    out << '\n';
  }
  for (std::size_t r = 0; r < paths.size(); ++r) {
    const auto& m = paths[r];
    for (std::size_t k = 0; k < m.values.size(); ++k) {
      out << r << ',' << k << ',' << m.times[k];
      for (int i = 0; i < m.dim(); ++i) out << ',' << m.values[k](i);
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace bdglab
