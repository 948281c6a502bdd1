#include "pbwos/spatial_index.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "pbwos/error.hpp"

namespace pbwos {

QueryStats& QueryStats::operator+=(const QueryStats& o) {
  queries += o.queries;
  candidate_evals += o.candidate_evals;
  nodes_visited += o.nodes_visited;
  hint_hits += o.hint_hits;
  fallbacks += o.fallbacks;
  return *this;
}

namespace {

// Pruning slack: a bound is only trusted to discard a subtree when it beats
// the incumbent by more than rounding noise in the distance evaluations.
inline double prune_slack(double best) { return 1e-12 * (1.0 + std::abs(best)); }

inline double box_distance(const Vec3& x, const Vec3& lo, const Vec3& hi) {
  const double dx = std::max({lo.x - x.x, 0.0, x.x - hi.x});
  const double dy = std::max({lo.y - x.y, 0.0, x.y - hi.y});
  const double dz = std::max({lo.z - x.z, 0.0, x.z - hi.z});
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline bool better(double gap, std::uint32_t index, double best_gap, std::uint32_t best_index) {
  return gap < best_gap || (gap == best_gap && index < best_index);
}

}  // namespace

SpatialIndex::SpatialIndex(const Molecule& mol, double neighbor_radius, std::size_t leaf_size)
    : mol_(&mol), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  const auto t0 = std::chrono::steady_clock::now();
  neighbor_radius_ = neighbor_radius > 0.0 ? neighbor_radius : 3.0 * mol.max_radius();

  const auto atoms = mol.atoms();
  items_.reserve(atoms.size());
  for (std::uint32_t i = 0; i < atoms.size(); ++i) items_.push_back({atoms[i].center, atoms[i].radius, i});
  nodes_.reserve(2 * atoms.size() / leaf_size_ + 2);
  nodes_.emplace_back();
  build(0, static_cast<std::uint32_t>(items_.size()), 1);
  build_neighbor_lists();

  build_stats_.nodes = nodes_.size();
  build_stats_.neighbor_entries = nb_.size();
  build_stats_.neighbor_radius = neighbor_radius_;
  build_stats_.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end, std::size_t depth) {
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  constexpr double inf = std::numeric_limits<double>::infinity();
  Node node;
  node.lo = {inf, inf, inf};
  node.hi = {-inf, -inf, -inf};
  node.begin = begin;
  node.end = end;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Vec3& c = items_[i].center;
    node.lo = {std::min(node.lo.x, c.x), std::min(node.lo.y, c.y), std::min(node.lo.z, c.z)};
    node.hi = {std::max(node.hi.x, c.x), std::max(node.hi.y, c.y), std::max(node.hi.z, c.z)};
    node.max_radius = std::max(node.max_radius, items_[i].radius);
  }
  build_stats_.depth = std::max(build_stats_.depth, depth);

  if (end - begin <= leaf_size_) {
    nodes_[id] = node;
    ++build_stats_.leaves;
    return id;
  }

  const Vec3 ext = node.hi - node.lo;
  const int axis = (ext.x >= ext.y && ext.x >= ext.z) ? 0 : (ext.y >= ext.z ? 1 : 2);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(items_.begin() + begin, items_.begin() + mid, items_.begin() + end,
                   [axis](const Item& a, const Item& b) { return a.center[axis] < b.center[axis]; });

  nodes_.emplace_back();
  node.left = build(begin, mid, depth + 1);
  nodes_.emplace_back();
  node.right = build(mid, end, depth + 1);
  nodes_[id] = node;
  return id;
}

void SpatialIndex::build_neighbor_lists() {
  const auto atoms = mol_->atoms();
  nb_offset_.assign(atoms.size() + 1, 0);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t i = 0; i < atoms.size(); ++i) {
    const Vec3 ci = atoms[i].center;
    const std::size_t first = nb_.size();
    stack.assign(1, 0);
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      if (box_distance(ci, node.lo, node.hi) > neighbor_radius_) continue;
      if (node.left == 0) {
        for (std::uint32_t k = node.begin; k < node.end; ++k) {
          const double d = distance(ci, items_[k].center);
          if (d <= neighbor_radius_) nb_.push_back({items_[k].center, items_[k].radius, d - items_[k].radius, items_[k].index});
        }
      } else {
        stack.push_back(node.left);
        stack.push_back(node.right);
      }
    }
    std::sort(nb_.begin() + static_cast<std::ptrdiff_t>(first), nb_.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.reach < b.reach || (a.reach == b.reach && a.index < b.index);
    });
    nb_offset_[i + 1] = nb_.size();
  }
}

void SpatialIndex::search(const Vec3& x, Best& best, QueryStats* stats) const {
  // Explicit stack; nearer child first so the incumbent tightens early.
  std::uint32_t stack[128];
  double bound[128];
  int top = 0;
  stack[top] = 0;
  bound[top] = box_distance(x, nodes_[0].lo, nodes_[0].hi) - nodes_[0].max_radius;
  ++top;
  std::uint64_t visited = 0;
  std::uint64_t evals = 0;
  while (top > 0) {
    --top;
    if (bound[top] > best.gap + prune_slack(best.gap)) continue;
    const Node& node = nodes_[stack[top]];
    ++visited;
    if (node.left == 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const Item& it = items_[k];
        const double g = atom_gap(x, it.center, it.radius);
        ++evals;
        if (better(g, it.index, best.gap, best.index)) best = {g, it.index};
      }
      continue;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    const double bl = box_distance(x, l.lo, l.hi) - l.max_radius;
    const double br = box_distance(x, r.lo, r.hi) - r.max_radius;
    if (bl <= br) {
      stack[top] = node.right;
      bound[top++] = br;
      stack[top] = node.left;
      bound[top++] = bl;
    } else {
      stack[top] = node.left;
      bound[top++] = bl;
      stack[top] = node.right;
      bound[top++] = br;
    }
  }
  if (stats) {
    stats->nodes_visited += visited;
    stats->candidate_evals += evals;
  }
}

std::uint32_t SpatialIndex::nearest(const Vec3& x, QueryStats* stats) const {
  if (stats) ++stats->queries;
  Best best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::uint32_t>::max()};
  search(x, best, stats);
  return best.index;
}

std::uint32_t SpatialIndex::nearest(const Vec3& x, std::uint32_t hint, QueryStats* stats) const {
  if (hint == kNoHint) return nearest(x, stats);
  if (hint >= mol_->size()) throw ArgumentError("nearest-atom hint out of range");
  if (stats) ++stats->queries;

  const double rmax = mol_->max_radius();
  const Vec3 ch = mol_->atom(hint).center;
  const double dh = distance(x, ch);
  const std::size_t b = nb_offset_[hint];
  const std::size_t e = nb_offset_[hint + 1];

  Best best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::uint32_t>::max()};
  std::uint64_t evals = 0;
  for (std::size_t k = b; k < e; ++k) {
    const Neighbor& nb = nb_[k];
    // gap_j >= |c_j - c_hint| - dh - r_j = reach_j - dh, and reach only grows.
    if (nb.reach - dh > best.gap + prune_slack(best.gap)) {
      break;
    }
    const double g = atom_gap(x, nb.center, nb.radius);
    ++evals;
    if (better(g, nb.index, best.gap, best.index)) best = {g, nb.index};
  }
  if (stats) stats->candidate_evals += evals;

  // Atoms beyond the list radius have gap >= neighbor_radius - dh - rmax.
  const bool covers_all = (e - b) == mol_->size();
  const bool outside_certified = neighbor_radius_ - dh - rmax > best.gap + prune_slack(best.gap);
  if (covers_all || outside_certified) {
    if (stats) ++stats->hint_hits;
    return best.index;
  }
  if (stats) ++stats->fallbacks;
  search(x, best, stats);
  return best.index;
}

std::optional<std::uint32_t> SpatialIndex::containing(const Vec3& x, std::uint32_t exclude, double tol,
                                                      QueryStats* stats) const {
  if (stats) ++stats->queries;
  std::optional<std::uint32_t> found;
  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (stats) ++stats->nodes_visited;
    if (box_distance(x, node.lo, node.hi) - node.max_radius >= -tol) continue;
    if (node.left == 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        const Item& it = items_[k];
        if (it.index == exclude) continue;
        if (stats) ++stats->candidate_evals;
        if (atom_gap(x, it.center, it.radius) < -tol && (!found || it.index < *found)) found = it.index;
      }
      continue;
    }
    stack[top++] = node.left;
    stack[top++] = node.right;
  }
  return found;
}

std::optional<std::uint32_t> SpatialIndex::first_containing(const Vec3& x, double tol, QueryStats* stats) const {
  return containing(x, kNoHint, tol, stats);
}

std::optional<std::uint32_t> SpatialIndex::first_containing_except(const Vec3& x, std::uint32_t exclude, double tol,
                                                                   QueryStats* stats) const {
  return containing(x, exclude, tol, stats);
}

}  // namespace pbwos
