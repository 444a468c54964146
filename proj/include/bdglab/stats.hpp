#pragma once

#include <cstddef>
#include <span>

namespace bdglab {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Welford accumulator with Chan's pairwise merge.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased; 0 when count < 2
  double std_error() const;
  MeanEstimate estimate() const { return {mean(), std_error()}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Paired (x, y) accumulator tracking the cross moment, for ratio estimates.
class PairedStats {
 public:
  void add(double x, double y);
  void merge(const PairedStats& other);

  std::size_t count() const { return n_; }
  MeanEstimate x() const;
  MeanEstimate y() const;
  double covariance() const;  // unbiased sample covariance of (x, y)

  /// x̄/ȳ with delta-method standard error using the paired covariance.
  MeanEstimate ratio() const;

 private:
  std::size_t n_ = 0;
  double mx_ = 0.0, my_ = 0.0;
  double sxx_ = 0.0, syy_ = 0.0, sxy_ = 0.0;
};

// Weighted mean of values (weights summing to 1); exact expectations on trees.
double weighted_mean(std::span<const double> values, std::span<const double> weights);

}  // namespace bdglab
