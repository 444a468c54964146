#include "bdglab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bdglab {

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  n_ += other.n_;
}

double RunningStats::variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::std_error() const {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

void PairedStats::add(double x, double y) {
  ++n_;
  const double n = static_cast<double>(n_);
  const double dx = x - mx_;
  const double dy = y - my_;
  mx_ += dx / n;
  my_ += dy / n;
  sxx_ += dx * (x - mx_);
  syy_ += dy * (y - my_);
  sxy_ += dx * (y - my_);
}

void PairedStats::merge(const PairedStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const double dx = other.mx_ - mx_;
  const double dy = other.my_ - my_;
  mx_ += dx * nb / n;
  my_ += dy * nb / n;
  sxx_ += other.sxx_ + dx * dx * na * nb / n;
  syy_ += other.syy_ + dy * dy * na * nb / n;
  sxy_ += other.sxy_ + dx * dy * na * nb / n;
  n_ += other.n_;
}

MeanEstimate PairedStats::x() const {
  if (n_ < 2) return {mx_, 0.0};
  const double n = static_cast<double>(n_);
  return {mx_, std::sqrt(sxx_ / (n - 1) / n)};
}

MeanEstimate PairedStats::y() const {
  if (n_ < 2) return {my_, 0.0};
  const double n = static_cast<double>(n_);
  return {my_, std::sqrt(syy_ / (n - 1) / n)};
}

double PairedStats::covariance() const {
  return n_ < 2 ? 0.0 : sxy_ / static_cast<double>(n_ - 1);
}

MeanEstimate PairedStats::ratio() const {
  if (my_ == 0.0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const double r = mx_ / my_;
  if (n_ < 2) return {r, 0.0};
  const double n = static_cast<double>(n_);
  const double vxx = sxx_ / (n - 1);
  const double vyy = syy_ / (n - 1);
  const double vxy = sxy_ / (n - 1);
  const double var = (vxx - 2.0 * r * vxy + r * r * vyy) / (n * my_ * my_);
  return {r, std::sqrt(std::max(var, 0.0))};
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw std::invalid_argument("weighted_mean: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += weights[i] * values[i];
  return acc;
}

}  // namespace bdglab
