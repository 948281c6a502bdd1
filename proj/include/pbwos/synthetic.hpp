#pragma once

#include <cstddef>
#include <cstdint>

#include <vector>

#include "pbwos/molecule.hpp"
#include "pbwos/spatial_index.hpp"

namespace pbwos {

struct SyntheticOptions {
  double min_center_distance = 1.2;  // A
  double min_radius = 1.2;           // A
  double max_radius = 2.0;           // A
  double volume_per_atom = 12.0;     // A^3, sets the enclosing ball
};

/// Random protein-like packing: centers dart-thrown into a ball with a
/// minimum separation, radii and charges uniform. Deterministic in `seed`.
Molecule make_synthetic_molecule(std::size_t n_atoms, std::uint64_t seed, const SyntheticOptions& options = {});

/// Query points recorded from exterior walks on spheres: each walk starts
/// `start_gap` outside a random atom surface point and runs until it enters
/// the epsilon shell or is killed at rate lambda, as between two jumps of a
/// solve.
std::vector<Vec3> walk_queries(const Molecule& mol, const SpatialIndex& index, std::size_t count, double start_gap,
                               double epsilon, double lambda, std::uint64_t seed);

}  // namespace pbwos
