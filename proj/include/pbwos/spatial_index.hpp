#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pbwos/molecule.hpp"

namespace pbwos {

/// Per-query instrumentation, owned by the caller.
struct QueryStats {
  std::uint64_t queries = 0;
  std::uint64_t candidate_evals = 0;  // atom_gap evaluations
  std::uint64_t nodes_visited = 0;    // kd-tree nodes touched
  std::uint64_t hint_hits = 0;        // answered from the hint's neighbor list
  std::uint64_t fallbacks = 0;        // hinted queries that needed the full tree

  QueryStats& operator+=(const QueryStats& o);
};

struct IndexBuildStats {
  std::size_t nodes = 0;
  std::size_t leaves = 0;
  std::size_t depth = 0;
  std::size_t neighbor_entries = 0;
  double neighbor_radius = 0.0;
  double build_seconds = 0.0;
};

/// Exact nearest-atom index for the weighted metric |x - c_i| - r_i.
///
/// A kd-tree over atom centers whose nodes carry the largest radius below
/// them. Queries run branch-and-bound on the lower bound
/// dist(x, box) - node_max_radius, which never exceeds the gap of any atom in
/// the box, so the answer always equals nearest_atom_brute (ties to the
/// lowest index).
///
/// The hinted query first scans the hint atom's neighbor list, sorted by
/// D - r (D: center distance from the hint). An atom j has
/// gap >= D_j - r_j - |x - c_hint|, which lets the scan stop early; atoms
/// beyond the list radius are certified with max_radius instead. When
/// that certificate fails the query falls back to the tree, seeded with the
/// best gap found so far.
///
/// Holds a pointer to the molecule, which must outlive the index. Queries are
/// const and thread-safe; hint state belongs to the caller.
class SpatialIndex {
 public:
  static constexpr std::uint32_t kNoHint = 0xFFFFFFFFu;

  /// `neighbor_radius` <= 0 selects the default of 3 * max_radius.
  explicit SpatialIndex(const Molecule& mol, double neighbor_radius = 0.0, std::size_t leaf_size = 8);

  const Molecule& molecule() const { return *mol_; }
  const IndexBuildStats& build_stats() const { return build_stats_; }

  /// Nearest atom without a hint.
  std::uint32_t nearest(const Vec3& x, QueryStats* stats = nullptr) const;

  /// Nearest atom starting from `hint` (kNoHint disables it). Throws
  /// ArgumentError when the hint is out of range.
  std::uint32_t nearest(const Vec3& x, std::uint32_t hint, QueryStats* stats = nullptr) const;

  /// Lowest-index atom with |x - c| < r - tol, or nullopt.
  std::optional<std::uint32_t> first_containing(const Vec3& x, double tol = 0.0, QueryStats* stats = nullptr) const;

  /// Same as first_containing but skips atom `exclude`.
  std::optional<std::uint32_t> first_containing_except(const Vec3& x, std::uint32_t exclude, double tol,
                                                       QueryStats* stats = nullptr) const;

  /// Number of atoms within the hint radius of atom i (including i).
  std::size_t neighbor_count(std::uint32_t i) const { return nb_offset_[i + 1] - nb_offset_[i]; }
  double neighbor_radius() const { return neighbor_radius_; }

 private:
  struct Node {
    Vec3 lo;
    Vec3 hi;
    double max_radius = 0.0;
    std::uint32_t begin = 0;  // range into items_
    std::uint32_t end = 0;
    std::uint32_t left = 0;   // 0 for leaves (the root is never a child)
    std::uint32_t right = 0;
  };
  struct Item {
    Vec3 center;
    double radius;
    std::uint32_t index;
  };
  struct Neighbor {
    Vec3 center;
    double radius;
    double reach;  // |c_j - c_hint| - r_j
    std::uint32_t index;
  };
  struct Best {
    double gap;
    std::uint32_t index;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::size_t depth);
  void build_neighbor_lists();
  void search(const Vec3& x, Best& best, QueryStats* stats) const;
  std::optional<std::uint32_t> containing(const Vec3& x, std::uint32_t exclude, double tol,
                                          QueryStats* stats) const;

  const Molecule* mol_;
  std::size_t leaf_size_;
  double neighbor_radius_;
  std::vector<Node> nodes_;
  std::vector<Item> items_;
  std::vector<std::size_t> nb_offset_;
  std::vector<Neighbor> nb_;
  IndexBuildStats build_stats_;
};

}  // namespace pbwos
