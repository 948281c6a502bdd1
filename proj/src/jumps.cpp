#include "pbwos/jumps.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pbwos/error.hpp"

namespace pbwos {

void JumpScheme::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ArgumentError("jump step h must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("jump asymmetry alpha must be positive");
  if (!(kappa_bar >= 0.0)) throw ArgumentError("kappa_bar must be non-negative");
}

std::string JumpScheme::label() const {
  if (kind == JumpKind::kSnj) return "snj";
  std::ostringstream os;
  os << jump_kind_name(kind) << '(' << alpha << ')';
  return os.str();
}

JumpKind parse_jump_kind(const std::string& name) {
  if (name == "snj") return JumpKind::kSnj;
  if (name == "anj") return JumpKind::kAnj;
  if (name == "taj") return JumpKind::kTaj;
  throw ConfigError("unknown jump scheme '" + name + "' (expected snj, anj or taj)");
}

const char* jump_kind_name(JumpKind kind) {
  switch (kind) {
    case JumpKind::kSnj:
      return "snj";
    case JumpKind::kAnj:
      return "anj";
    case JumpKind::kTaj:
      return "taj";
  }
  return "?";
}

JumpStencil jump_stencil(const JumpScheme& s, const SurfacePoint& sp, double eps_in, double eps_out) {
  const Vec3 x = sp.position;
  const Vec3 n = sp.normal;
  JumpStencil st;
  switch (s.kind) {
    case JumpKind::kSnj: {
      const double p_out = eps_out / (eps_in + eps_out);
      st.points[0] = x - s.h * n;
      st.weights[0] = 1.0 - p_out;
      st.points[1] = x + s.h * n;
      st.weights[1] = p_out;
      st.size = 2;
      st.inward = 1;
      break;
    }
    case JumpKind::kAnj: {
      const double p_out = eps_out / (eps_out + s.alpha * eps_in);
      st.points[0] = x - s.h * n;
      st.weights[0] = 1.0 - p_out;
      st.points[1] = x + (s.alpha * s.h) * n;
      st.weights[1] = p_out;
      st.size = 2;
      st.inward = 1;
      break;
    }
    case JumpKind::kTaj: {
      const double ah = s.alpha * s.h;
      const double kill = 0.5 * s.kappa_bar * s.kappa_bar * ah * ah;
      const double w = s.alpha * eps_in + eps_out + kill;
      const auto [m, q] = tangent_basis(n);
      const double t_in = std::sqrt(2.0) * s.h;
      const double t_out = std::sqrt(2.0) * ah;
      const Vec3 base_in = x - s.h * n;
      const Vec3 base_out = x + ah * n;
      const Vec3 tangents[4] = {m, -m, q, -q};
      for (int k = 0; k < 4; ++k) {
        st.points[k] = base_in + t_in * tangents[k];
        st.weights[k] = s.alpha * eps_in / w / 4.0;
        st.points[4 + k] = base_out + t_out * tangents[k];
        st.weights[4 + k] = eps_out / w / 4.0;
      }
      st.size = 8;
      st.inward = 4;
      st.kill_probability = kill / w;
      break;
    }
  }
  return st;
}

namespace {

// Radially pushes p out of the containing atom whose surface is closest,
// to distance h from that sphere.
Vec3 push_out(const Molecule& mol, const Vec3& p, double h) {
  double best_gap = -std::numeric_limits<double>::infinity();
  std::uint32_t best = 0;
  const auto atoms = mol.atoms();
  for (std::uint32_t i = 0; i < atoms.size(); ++i) {
    const double g = atom_gap(p, atoms[i]);
    if (g < 0.0 && g > best_gap) {
      best_gap = g;
      best = i;
    }
  }
  const Atom& a = mol.atom(best);
  const Vec3 d = p - a.center;
  const double len = norm(d);
  if (!(len > 0.0)) return p;
  return a.center + ((a.radius + h) / len) * d;
}

}  // namespace

JumpOutcome jump(const JumpScheme& scheme, const SurfacePoint& sp, const SpatialIndex& index, double eps_in,
                 double eps_out, RngStream& rng) {
  const JumpStencil st = jump_stencil(scheme, sp, eps_in, eps_out);
  JumpOutcome out;
  double u = rng.uniform();
  if (u < st.kill_probability) {
    out.kind = JumpOutcome::Kind::kKilled;
    out.point = sp.position;
    return out;
  }
  u -= st.kill_probability;
  int chosen = st.size - 1;
  for (int k = 0; k < st.size; ++k) {
    if (u < st.weights[k]) {
      chosen = k;
      break;
    }
    u -= st.weights[k];
  }

  out.point = st.points[chosen];
  out.inside = index.first_containing(out.point).has_value();
  if (scheme.kind != JumpKind::kTaj || chosen < st.inward || !out.inside) return out;

  out.relocated = true;
  const Molecule& mol = index.molecule();
  for (int k = 0; k < 4; ++k) {
    const Vec3 cand = st.points[st.inward + (chosen - st.inward + k) % 4];
    if (!index.first_containing(cand)) {
      out.point = cand;
      out.inside = false;
      return out;
    }
    const Vec3 moved = push_out(mol, cand, scheme.h);
    if (!index.first_containing(moved)) {
      out.point = moved;
      out.inside = false;
      return out;
    }
  }
  out.point = sp.position + scheme.h * sp.normal;
  out.inside = index.first_containing(out.point).has_value();
  return out;
}

}  // namespace pbwos
