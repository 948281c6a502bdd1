#pragma once

// Test-only numerical oracles. Nothing here calls into the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "pbwos/physconst.hpp"

namespace oracle {

inline pbwos::PhysicalConstants table_inputs() {
  pbwos::PhysicalConstants c;
  c.boltzmann = 1.3806488e-23;
  c.elementary_charge = 1.602176565e-19;
  c.temperature = 298.0;
  c.vacuum_permittivity = 8.854187817e-12;
  c.avogadro = 6.02214129e23;
  c.eps_in = 2.0;
  c.eps_out = 80.0;
  c.ion_concentration = 1.0;
  c.ion_charge = 1.0;
  return c;
}

// Inverse Debye length in 1/A from SI inputs, written out from scratch.
inline double kappa_bar(const pbwos::PhysicalConstants& c) {
  const double ions_per_m3 = c.ion_concentration * 1000.0 * c.avogadro;
  const double k2 = 2.0 * ions_per_m3 * c.ion_charge * c.ion_charge * c.elementary_charge * c.elementary_charge /
                    (c.vacuum_permittivity * c.boltzmann * c.temperature);
  return std::sqrt(k2) * 1e-10;
}

inline double source_c(const pbwos::PhysicalConstants& c) {
  return c.elementary_charge * c.elementary_charge / (c.boltzmann * c.temperature * c.vacuum_permittivity) * 1e10;
}

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double dx = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * dx);
  return s * dx / 3.0;
}

// Harmonic measure of the sphere of radius R seen from distance r < R of
// the center, integrated over polar angles [0, alpha].
inline double exit_angle_cdf(double R, double r, double alpha) {
  const auto dens = [&](double t) {
    const double d2 = R * R + r * r - 2.0 * R * r * std::cos(t);
    return (R * R - r * r) * R * std::sin(t) / (2.0 * std::pow(d2, 1.5));
  };
  return simpson(dens, 0.0, alpha, 4000);
}

// Death radius of a path killed at rate lambda inside B(0, R) given death
// before exit: density proportional to r sinh(a (R - r)), from the killed
// Green function at the center.
inline double split_radius_cdf(double R, double lambda, double r) {
  const double a = std::sqrt(2.0 * lambda);
  const auto dens = [&](double s) { return s * std::sinh(a * (R - s)); };
  return simpson(dens, 0.0, r, 4000) / simpson(dens, 0.0, R, 4000);
}

// Two-sided one-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

// Asymptotic 1% critical value of the KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

// Upper tail of the chi-square law (Wilson-Hilferty cube-root approximation).
inline double chi2_upper_tail(double x, double dof) {
  const double z = (std::cbrt(x / dof) - (1.0 - 2.0 / (9.0 * dof))) / std::sqrt(2.0 / (9.0 * dof));
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

// Offspring generating function and its iterates.
inline double offspring_pgf(double s) {
  const double p0 = 2.0 - std::sinh(1.0);
  const double raw = p0 + 1.0 / 6 + 1.0 / 120 + 1.0 / 5040 + 1.0 / 362880;
  return (p0 + std::pow(s, 3) / 6 + std::pow(s, 5) / 120 + std::pow(s, 7) / 5040 + std::pow(s, 9) / 362880) / raw;
}

// P(tree height <= k) = f^(k+1)(0).
inline double height_at_most(int k) {
  double s = 0.0;
  for (int i = 0; i <= k; ++i) s = offspring_pgf(s);
  return s;
}

// Least-squares slope of log|y| on log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(std::abs(y[i])) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(std::abs(y[i])) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace oracle
