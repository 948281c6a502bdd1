#include "pbwos/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "pbwos/error.hpp"
#include "pbwos/rng.hpp"
#include "pbwos/sampling.hpp"
#include "pbwos/walkers.hpp"

namespace pbwos {

namespace {

struct CellKey {
  std::int64_t i, j, k;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& c) const {
    return static_cast<std::size_t>((c.i * 73856093) ^ (c.j * 19349663) ^ (c.k * 83492791));
  }
};

}  // namespace

Molecule make_synthetic_molecule(std::size_t n_atoms, std::uint64_t seed, const SyntheticOptions& opt) {
  if (n_atoms == 0) throw ArgumentError("synthetic molecule needs at least one atom");
  if (!(opt.min_radius > 0.0) || opt.max_radius < opt.min_radius) throw ArgumentError("bad synthetic radius range");

  const double ball = std::cbrt(3.0 * opt.volume_per_atom * static_cast<double>(n_atoms) / (4.0 * std::numbers::pi));
  const double cell = opt.min_center_distance;
  const double d2 = cell * cell;
  RngStream rng(seed, 0x5e7a11c0ffeeULL);
  std::unordered_map<CellKey, std::vector<Vec3>, CellHash> grid;
  std::vector<Atom> atoms;
  atoms.reserve(n_atoms);

  auto key_of = [cell](const Vec3& p) {
    return CellKey{static_cast<std::int64_t>(std::floor(p.x / cell)), static_cast<std::int64_t>(std::floor(p.y / cell)),
                   static_cast<std::int64_t>(std::floor(p.z / cell))};
  };

  const std::size_t max_attempts = 1000 * n_atoms + 1000;
  for (std::size_t attempt = 0; atoms.size() < n_atoms; ++attempt) {
    if (attempt >= max_attempts) throw NumericalError("synthetic packing too dense; raise volume_per_atom");
    const Vec3 p{ball * (2.0 * rng.uniform() - 1.0), ball * (2.0 * rng.uniform() - 1.0),
                 ball * (2.0 * rng.uniform() - 1.0)};
    if (norm2(p) > ball * ball) continue;
    const CellKey k = key_of(p);
    bool clash = false;
    for (std::int64_t di = -1; di <= 1 && !clash; ++di) {
      for (std::int64_t dj = -1; dj <= 1 && !clash; ++dj) {
        for (std::int64_t dk = -1; dk <= 1 && !clash; ++dk) {
          const auto it = grid.find({k.i + di, k.j + dj, k.k + dk});
          if (it == grid.end()) continue;
          for (const Vec3& q : it->second) {
            if (norm2(p - q) < d2) {
              clash = true;
              break;
            }
          }
        }
      }
    }
    if (clash) continue;
    grid[k].push_back(p);
    const double radius = opt.min_radius + (opt.max_radius - opt.min_radius) * rng.uniform();
    const double charge = 2.0 * rng.uniform() - 1.0;
    atoms.push_back({p, radius, charge});
  }
  return Molecule(std::move(atoms));
}

std::vector<Vec3> walk_queries(const Molecule& mol, const SpatialIndex& index, std::size_t count, double start_gap,
                               double epsilon, double lambda, std::uint64_t seed) {
  RngStream rng(seed, 1);
  std::vector<Vec3> q;
  q.reserve(count);
  while (q.size() < count) {
    const Atom& atom = mol.atom(static_cast<std::size_t>(rng.uniform() * static_cast<double>(mol.size())));
    Vec3 x = atom.center + (atom.radius + start_gap) * uniform_direction(rng);
    if (signed_distance(mol, x) <= 0.0) continue;
    std::uint32_t hint = SpatialIndex::kNoHint;
    while (q.size() < count) {
      q.push_back(x);
      hint = index.nearest(x, hint);
      const double d = atom_gap(x, mol.atom(hint));
      if (d <= epsilon || rng.uniform() < kill_probability(d, lambda)) break;
      x += d * uniform_direction(rng);
    }
  }
  return q;
}

}  // namespace pbwos
