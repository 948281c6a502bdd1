#pragma once

#include <cstdint>
#include <span>

namespace pbwos {

/// Welford running mean and variance; merge() is Chan's pairwise update.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 with fewer than two samples.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

constexpr double kZ95 = 1.959964;

/// True when the largest 1% of the non-negative contributions carry more
/// than half of their total.
bool top_percentile_dominates(std::span<const double> contributions);

/// Least-squares slope of log|y| against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace pbwos
