#include "pbwos/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pbwos/error.hpp"

namespace pbwos {

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double d = o.mean_ - mean_;
  mean_ += d * nb / n;
  m2_ += o.m2_ + d * d * na * nb / n;
  n_ += o.n_;
}

double RunningStats::std_error() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

bool top_percentile_dominates(std::span<const double> contributions) {
  if (contributions.empty()) return false;
  std::vector<double> c(contributions.begin(), contributions.end());
  const std::size_t k = std::max<std::size_t>(1, c.size() / 100);
  std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k - 1), c.end(), std::greater<>());
  double top = 0.0;
  for (std::size_t i = 0; i < k; ++i) top += c[i];
  double total = top;
  for (std::size_t i = k; i < c.size(); ++i) total += c[i];
  return total > 0.0 && top > 0.5 * total;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("loglog_slope needs two or more matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace pbwos
