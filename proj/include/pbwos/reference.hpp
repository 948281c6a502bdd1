#pragma once

#include <cstddef>
#include <vector>

#include "pbwos/physconst.hpp"

namespace pbwos {

/// (u - u0) at the center of a lone charged sphere of radius r, linear model:
/// (C z / (4 pi r)) [1 / (eps_out (1 + kappa_out r)) - 1 / eps_in].
double linear_single_atom(const PbParameters& params, double r, double z);

/// Uniform grid on [r_min, r_max] for the exterior radial problem.
struct RadialGrid {
  double r_min = 1.0;
  double r_max = 100.0;
  std::size_t n_points = 10000;

  double spacing() const { return (r_max - r_min) / static_cast<double>(n_points - 1); }

  /// r_max = r + 40 / kappa_out.
  static RadialGrid for_atom(const PbParameters& params, double r, std::size_t n_points = 20000);

  /// Throws ArgumentError unless n_points >= 1e4 and, for kappa_out > 0,
  /// r_max >= r_min + 30 / kappa_out.
  void validate(const PbParameters& params) const;
};

struct RadialSolution {
  std::vector<double> x;
  std::vector<double> v;
  double reaction_potential = 0.0;  // v(r) - C z / (4 pi eps_in r)
  int iterations = 0;
  double residual = 0.0;
};

/// Exterior potential of a lone sphere in the nonlinear model:
/// v'' + (2/x) v' = kappa_out^2 sinh v on (r, r_max), with
/// v'(r) = -C z / (4 pi eps_out r^2) and v(r_max) = 0. Second-order finite
/// differences (one-sided at x = r) solved by damped Newton from the
/// linearized solution; converged when the scaled residual drops below
/// 1e-10. Throws NumericalError after 200 iterations.
RadialSolution nonlinear_single_atom(const PbParameters& params, double r, double z, const RadialGrid& grid);

/// The same discretization with sinh v replaced by v.
RadialSolution linear_radial(const PbParameters& params, double r, double z, const RadialGrid& grid);

}  // namespace pbwos
