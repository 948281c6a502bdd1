#pragma once

#include <cstdint>

#include "pbwos/molecule.hpp"
#include "pbwos/rng.hpp"
#include "pbwos/spatial_index.hpp"

namespace pbwos {

struct WalkConfig {
  double lambda = 0.0;          // 1/A^2, killing rate of the exterior walk
  double epsilon_shell = 1e-4;  // A
  std::uint64_t max_steps = 100000000;

  /// Throws ArgumentError unless epsilon_shell > 0, max_steps >= 1, lambda >= 0.
  void validate() const;
};

struct WalkOutcome {
  enum class Kind { kExit, kKilled, kSplit };

  Kind kind = Kind::kExit;
  SurfacePoint exit;    // kExit
  Vec3 split;           // kSplit
  Vec3 last_center;     // center of the sphere on which the walk ended
  double last_radius = 0.0;
  std::uint64_t steps = 0;
};

/// 1 - x / sinh(x) with x = radius * sqrt(2 lambda): probability that a path
/// killed at rate lambda dies before leaving a ball of that radius.
double kill_probability(double radius, double lambda);

/// Walk on spheres in the solvent from x0 (signed distance > 0). Each step
/// uses the largest empty sphere, kills with kill_probability, then moves to
/// a uniform point of the sphere; the walk stops inside the epsilon shell and
/// returns the radial projection onto the nearest atom.
///
/// `hint` carries the previous nearest atom between calls (kNoHint to start
/// cold) and is updated in place. Throws NumericalError past max_steps.
WalkOutcome wos_walk(const SpatialIndex& index, const Vec3& x0, const WalkConfig& cfg, RngStream& rng,
                     std::uint32_t& hint, QueryStats* stats = nullptr);

/// As wos_walk, but a killed path reports where it died: a split point at
/// distance bwos_sample_radius from the last sphere center, uniform in
/// direction. Requires lambda > 0.
WalkOutcome bwos_walk(const SpatialIndex& index, const Vec3& x0, const WalkConfig& cfg, RngStream& rng,
                      std::uint32_t& hint, QueryStats* stats = nullptr);

constexpr double kSurfaceTolerance = 1e-9;

/// Exact exit point on the molecular surface of a Brownian path started at
/// x0 inside the molecule. Each step leaves the lowest-index atom containing
/// the current point through the uncentered exit law; it stops once the exit
/// point lies in no other atom (tolerance kSurfaceTolerance). `steps`, when
/// given, receives the number of spheres crossed.
SurfacePoint uwos_exit(const SpatialIndex& index, const Vec3& x0, RngStream& rng, std::uint64_t max_steps = 1000000,
                       std::uint64_t* steps = nullptr);

}  // namespace pbwos
