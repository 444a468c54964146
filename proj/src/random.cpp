#include "bdglab/random.hpp"

#include <cmath>
#include <numbers>

namespace bdglab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ULL + (a << 6) + (a >> 2)));
}

RandomStream::RandomStream(std::uint64_t seed) : key_(splitmix64(seed)), engine_(key_) {}

RandomStream RandomStream::substream(std::uint64_t index) const {
  RandomStream child(0);
  child.key_ = mix_keys(key_, index);
  child.engine_.seed(child.key_);
  return child;
}

RandomStream RandomStream::fork() { return RandomStream(engine_()); }

double RandomStream::uniform() { return std::generate_canonical<double, 53>(engine_); }

double RandomStream::normal() { return normal_(engine_); }

Eigen::VectorXd RandomStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = normal_(engine_);
  return g;
}

double RandomStream::exponential(double rate) {
  // 1 - U lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform()) / rate;
}

double hashed_normal(std::uint64_t key, std::uint64_t index) {
  const std::uint64_t h1 = mix_keys(key, 2 * index);
  const std::uint64_t h2 = mix_keys(key, 2 * index + 1);
  const double u1 = (static_cast<double>(h1 >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace bdglab
