#include "pbwos/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pbwos/error.hpp"

namespace pbwos {

double linear_single_atom(const PbParameters& params, double r, double z) {
  if (!(r > 0.0)) throw ArgumentError("atom radius must be positive");
  const double pref = params.source_c * z / (4.0 * std::numbers::pi * r);
  return pref * (1.0 / (params.eps_out() * (1.0 + params.kappa_out * r)) - 1.0 / params.eps_in());
}

RadialGrid RadialGrid::for_atom(const PbParameters& params, double r, std::size_t n_points) {
  if (!(params.kappa_out > 0.0)) throw ArgumentError("radial reference needs a positive kappa_out");
  return RadialGrid{r, r + 40.0 / params.kappa_out, n_points};
}

void RadialGrid::validate(const PbParameters& params) const {
  if (!(r_min > 0.0)) throw ArgumentError("radial grid must start at a positive radius");
  if (n_points < 10000) throw ArgumentError("radial grid needs at least 1e4 points");
  if (!(r_max > r_min)) throw ArgumentError("radial grid is empty");
  if (params.kappa_out > 0.0 && r_max < r_min + 30.0 / params.kappa_out) {
    throw ArgumentError("radial grid too short: r_max must reach r + 30 / kappa_out");
  }
}

namespace {

// Residual rows scaled so that every row is O(v): interior rows by dx^2,
// the boundary row by dx. Unknowns are v_0 .. v_{n-2}; v_{n-1} = 0.
class RadialProblem {
 public:
  RadialProblem(const PbParameters& params, double r, double z, const RadialGrid& grid, bool nonlinear)
      : n_(grid.n_points - 1), dx_(grid.spacing()), k2_(params.kappa_out * params.kappa_out),
        nonlinear_(nonlinear), x_(grid.n_points) {
    for (std::size_t i = 0; i < grid.n_points; ++i) x_[i] = grid.r_min + dx_ * static_cast<double>(i);
    slope_ = -params.source_c * z / (4.0 * std::numbers::pi * params.eps_out() * r * r);
  }

  std::size_t unknowns() const { return n_; }
  const std::vector<double>& x() const { return x_; }

  double source(double v) const { return nonlinear_ ? std::sinh(v) : v; }
  double source_derivative(double v) const { return nonlinear_ ? std::cosh(v) : 1.0; }

  double at(const std::vector<double>& v, std::size_t i) const { return i < n_ ? v[i] : 0.0; }

  void residual(const std::vector<double>& v, std::vector<double>& res) const {
    res.resize(n_);
    res[0] = 0.5 * (-3.0 * v[0] + 4.0 * at(v, 1) - at(v, 2)) - dx_ * slope_;
    for (std::size_t i = 1; i < n_; ++i) {
      const double c = dx_ / x_[i];
      res[i] = (1.0 + c) * at(v, i + 1) - 2.0 * v[i] + (1.0 - c) * v[i - 1] - dx_ * dx_ * k2_ * source(v[i]);
    }
  }

  // Solves J d = rhs for the Newton step. Row 0 has a third entry on v_2,
  // eliminated with row 1 to keep the system tridiagonal.
  void solve(const std::vector<double>& v, std::vector<double> rhs, std::vector<double>& d) const {
    std::vector<double> lo(n_, 0.0), di(n_, 0.0), up(n_, 0.0);
    for (std::size_t i = 1; i < n_; ++i) {
      const double c = dx_ / x_[i];
      lo[i] = 1.0 - c;
      di[i] = -2.0 - dx_ * dx_ * k2_ * source_derivative(v[i]);
      up[i] = i + 1 < n_ ? 1.0 + c : 0.0;
    }
    di[0] = -1.5;
    up[0] = 2.0;
    if (n_ > 2) {
      const double j02 = -0.5;
      const double f = j02 / up[1];
      di[0] -= f * lo[1];
      up[0] -= f * di[1];
      rhs[0] -= f * rhs[1];
    }
    // Thomas algorithm.
    std::vector<double> cp(n_), dp(n_);
    cp[0] = up[0] / di[0];
    dp[0] = rhs[0] / di[0];
    for (std::size_t i = 1; i < n_; ++i) {
      const double m = di[i] - lo[i] * cp[i - 1];
      cp[i] = up[i] / m;
      dp[i] = (rhs[i] - lo[i] * dp[i - 1]) / m;
    }
    d.assign(n_, 0.0);
    d[n_ - 1] = dp[n_ - 1];
    for (std::size_t i = n_ - 1; i-- > 0;) d[i] = dp[i] - cp[i] * d[i + 1];
  }

 private:
  std::size_t n_;
  double dx_;
  double k2_;
  bool nonlinear_;
  double slope_ = 0.0;
  std::vector<double> x_;
};

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

RadialSolution solve_radial(const PbParameters& params, double r, double z, const RadialGrid& grid,
                            bool nonlinear) {
  if (!(r > 0.0)) throw ArgumentError("atom radius must be positive");
  if (std::abs(grid.r_min - r) > 1e-12 * r) throw ArgumentError("radial grid must start at the atom radius");
  grid.validate(params);

  constexpr double kTolerance = 1e-10;
  constexpr int kMaxIterations = 200;

  // Linearized solve: exact in one step from zero, and the nonlinear start.
  RadialProblem linear(params, r, z, grid, false);
  std::vector<double> v(linear.unknowns(), 0.0), res, d;
  linear.residual(v, res);
  for (double& e : res) e = -e;
  linear.solve(v, res, d);
  v = d;

  RadialSolution sol;
  RadialProblem problem(params, r, z, grid, nonlinear);
  problem.residual(v, res);
  double norm_res = max_abs(res);
  int it = 0;
  std::vector<double> trial, trial_res;
  while (norm_res >= kTolerance) {
    if (++it > kMaxIterations) {
      throw NumericalError("radial Newton did not converge (residual " + std::to_string(norm_res) + ")");
    }
    std::vector<double> rhs(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) rhs[i] = -res[i];
    problem.solve(v, rhs, d);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      trial = v;
      for (std::size_t i = 0; i < v.size(); ++i) trial[i] += t * d[i];
      problem.residual(trial, trial_res);
      const double nr = max_abs(trial_res);
      if (std::isfinite(nr) && nr < norm_res) {
        v.swap(trial);
        res.swap(trial_res);
        norm_res = nr;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NumericalError("radial Newton stagnated (residual " + std::to_string(norm_res) + ")");
  }

  sol.x = problem.x();
  sol.v = v;
  sol.v.push_back(0.0);
  sol.iterations = it;
  sol.residual = norm_res;
  sol.reaction_potential = sol.v[0] - params.source_c * z / (4.0 * std::numbers::pi * params.eps_in() * r);
  return sol;
}

}  // namespace

RadialSolution nonlinear_single_atom(const PbParameters& params, double r, double z, const RadialGrid& grid) {
  return solve_radial(params, r, z, grid, true);
}

RadialSolution linear_radial(const PbParameters& params, double r, double z, const RadialGrid& grid) {
  return solve_radial(params, r, z, grid, false);
}

}  // namespace pbwos
