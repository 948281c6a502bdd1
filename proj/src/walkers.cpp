#include "pbwos/walkers.hpp"

#include <cmath>
#include <numbers>

#include "pbwos/error.hpp"
#include "pbwos/sampling.hpp"

namespace pbwos {

void WalkConfig::validate() const {
  if (!(epsilon_shell > 0.0)) throw ArgumentError("epsilon_shell must be positive");
  if (max_steps < 1) throw ArgumentError("max_steps must be at least 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be non-negative");
}

double kill_probability(double radius, double lambda) {
  if (!(radius > 0.0)) throw ArgumentError("kill_probability: radius must be positive");
  if (!(lambda >= 0.0)) throw ArgumentError("kill_probability: lambda must be non-negative");
  const double x = radius * std::sqrt(2.0 * lambda);
  if (x < 1e-4) {
    const double x2 = x * x;
    return x2 / 6.0 - 7.0 * x2 * x2 / 360.0;
  }
  if (x > 700.0) return 1.0;
  return 1.0 - x / std::sinh(x);
}

namespace {

template <bool kSplit>
WalkOutcome walk(const SpatialIndex& index, const Vec3& x0, const WalkConfig& cfg, RngStream& rng,
                 std::uint32_t& hint, QueryStats* stats) {
  const Molecule& mol = index.molecule();
  const bool killing = cfg.lambda > 0.0;
  WalkOutcome out;
  Vec3 x = x0;
  for (std::uint64_t step = 0;; ++step) {
    const std::uint32_t nearest = index.nearest(x, hint, stats);
    hint = nearest;
    const double d = atom_gap(x, mol.atom(nearest));
    if (step == 0 && d < 0.0) throw ArgumentError("exterior walk started inside the molecule");
    if (d <= cfg.epsilon_shell) {
      out.kind = WalkOutcome::Kind::kExit;
      out.exit = radial_projection(mol, nearest, x);
      out.last_center = x;
      out.last_radius = d;
      out.steps = step;
      return out;
    }
    if (step >= cfg.max_steps) throw NumericalError("exterior walk exceeded max_steps");
    if (killing && rng.uniform() < kill_probability(d, cfg.lambda)) {
      out.last_center = x;
      out.last_radius = d;
      out.steps = step + 1;
      if constexpr (kSplit) {
        const double r = bwos_sample_radius(rng, d, cfg.lambda);
        out.kind = WalkOutcome::Kind::kSplit;
        out.split = x + r * uniform_direction(rng);
      } else {
        out.kind = WalkOutcome::Kind::kKilled;
      }
      return out;
    }
    x += d * uniform_direction(rng);
  }
}

}  // namespace

WalkOutcome wos_walk(const SpatialIndex& index, const Vec3& x0, const WalkConfig& cfg, RngStream& rng,
                     std::uint32_t& hint, QueryStats* stats) {
  return walk<false>(index, x0, cfg, rng, hint, stats);
}

WalkOutcome bwos_walk(const SpatialIndex& index, const Vec3& x0, const WalkConfig& cfg, RngStream& rng,
                      std::uint32_t& hint, QueryStats* stats) {
  if (!(cfg.lambda > 0.0)) throw ArgumentError("branching walk requires lambda > 0");
  return walk<true>(index, x0, cfg, rng, hint, stats);
}

SurfacePoint uwos_exit(const SpatialIndex& index, const Vec3& x0, RngStream& rng, std::uint64_t max_steps,
                       std::uint64_t* steps) {
  const Molecule& mol = index.molecule();
  auto start = index.first_containing(x0, 0.0);
  if (!start) throw ArgumentError("interior walk started outside the molecule");
  std::uint32_t atom = *start;
  Vec3 x = x0;
  for (std::uint64_t step = 1;; ++step) {
    if (step > max_steps) throw NumericalError("interior walk exceeded max_steps");
    const Atom& a = mol.atom(atom);
    const Vec3 v = x - a.center;
    const double rho = norm(v);
    Vec3 dir;
    if (rho < 1e-12 * a.radius) {
      dir = uniform_direction(rng);
    } else {
      const Vec3 axis = v * (1.0 / rho);
      const double alpha = uwos_sample_angle(rng, a.radius, rho);
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      const auto [m, q] = tangent_basis(axis);
      const double sa = std::sin(alpha);
      dir = std::cos(alpha) * axis + (sa * std::cos(phi)) * m + (sa * std::sin(phi)) * q;
      dir *= 1.0 / norm(dir);
    }
    const Vec3 y = a.center + a.radius * dir;
    const auto next = index.first_containing_except(y, atom, kSurfaceTolerance);
    if (!next) {
      if (steps) *steps = step;
      return SurfacePoint{y, atom, dir};
    }
    atom = *next;
    x = y;
  }
}

}  // namespace pbwos
