#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "pbwos/molecule.hpp"
#include "pbwos/rng.hpp"
#include "pbwos/spatial_index.hpp"

namespace pbwos {

enum class JumpKind { kSnj, kAnj, kTaj };

/// Boundary replacement after a walk reaches the surface.
///   SNJ: symmetric normal jump of length h.
///   ANJ: outward jump alpha*h, inward jump h.
///   TAJ: tangential-asymmetric jump to one of eight points at distance
///        sqrt(3) h (inside) or sqrt(3) alpha h (outside), plus a boundary
///        killing branch weighted by kappa_bar.
struct JumpScheme {
  JumpKind kind = JumpKind::kSnj;
  double h = 0.1;
  double alpha = 1.0;
  double kappa_bar = 0.0;

  static JumpScheme snj(double h) { return {JumpKind::kSnj, h, 1.0, 0.0}; }
  static JumpScheme anj(double h, double alpha) { return {JumpKind::kAnj, h, alpha, 0.0}; }
  static JumpScheme taj(double h, double alpha, double kappa_bar) { return {JumpKind::kTaj, h, alpha, kappa_bar}; }

  /// Throws ArgumentError unless h > 0, alpha > 0, kappa_bar >= 0.
  void validate() const;
  /// "snj", "anj(3)", "taj(10)".
  std::string label() const;
};

JumpKind parse_jump_kind(const std::string& name);
const char* jump_kind_name(JumpKind kind);

/// Candidate landing points of one jump with their probabilities. Points
/// [0, inward) move into the molecule, [inward, size) move out. The weights
/// plus kill_probability sum to one.
struct JumpStencil {
  std::array<Vec3, 8> points{};
  std::array<double, 8> weights{};
  int size = 0;
  int inward = 0;
  double kill_probability = 0.0;
};

JumpStencil jump_stencil(const JumpScheme& scheme, const SurfacePoint& sp, double eps_in, double eps_out);

struct JumpOutcome {
  enum class Kind { kMoved, kKilled };

  Kind kind = Kind::kMoved;
  Vec3 point;
  bool inside = false;     // containment of the landed point
  bool relocated = false;  // TAJ outward landing pushed back out
};

/// Samples one jump from sp. The landed side comes from a containment test,
/// not the jump direction. A TAJ outward landing inside the molecule is
/// pushed out: the four outward candidates are tried in cyclic order from
/// the drawn one, each moved radially to distance h outside the containing
/// atom closest to its surface; the first point outside wins, otherwise the
/// landing is sp + h n.
JumpOutcome jump(const JumpScheme& scheme, const SurfacePoint& sp, const SpatialIndex& index, double eps_in,
                 double eps_out, RngStream& rng);

}  // namespace pbwos
