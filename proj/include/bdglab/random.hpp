#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace bdglab {

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive combination of two 64-bit keys.
std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b);

/// A seeded random stream with deterministic child streams.
///
/// `substream(i)` depends only on the stream's key and `i`, never on how many
/// draws have been taken, so work split into indexed blocks reproduces the same
/// numbers no matter how the blocks are scheduled. `fork()` advances this
/// stream and returns an independent child, which is how estimators obtain
/// fresh randomness from a caller-supplied stream.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  std::uint64_t key() const { return key_; }
  RandomStream substream(std::uint64_t index) const;
  RandomStream fork();

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);
  double exponential(double rate);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Counter-based standard normal: a pure function of (key, index). Used where a
// value must be reproducible from its coordinates alone (tree node increments).
double hashed_normal(std::uint64_t key, std::uint64_t index);

}  // namespace bdglab
