#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pbwos/vec3.hpp"

namespace pbwos {

struct Atom {
  Vec3 center;
  double radius = 1.0;  // angstrom, > 0
  double charge = 0.0;  // relative charge z_i
};

/// Gap between x and the sphere of `atom`: |x - c| - r. Negative inside.
/// Every localization routine goes through this one expression so that
/// brute-force and indexed searches compare bit-identical values.
inline double atom_gap(const Vec3& x, const Vec3& center, double radius) {
  return distance(x, center) - radius;
}
inline double atom_gap(const Vec3& x, const Atom& atom) { return atom_gap(x, atom.center, atom.radius); }

/// Union of atom spheres. Immutable after construction.
class Molecule {
 public:
  explicit Molecule(std::vector<Atom> atoms);

  std::span<const Atom> atoms() const { return atoms_; }
  const Atom& atom(std::size_t i) const { return atoms_[i]; }
  std::size_t size() const { return atoms_.size(); }
  double max_radius() const { return max_radius_; }
  double total_charge() const;

  /// Axis-aligned box enclosing every sphere.
  std::pair<Vec3, Vec3> bounding_box() const;

 private:
  std::vector<Atom> atoms_;
  double max_radius_ = 0.0;
};

/// Reads ATOM/HETATM records of a PQR file. The last five whitespace
/// separated tokens of a record are x, y, z, charge, radius; this accepts
/// the chain-ID and no-chain-ID variants alike. Throws ParseError.
Molecule parse_pqr(std::istream& in);
Molecule parse_pqr_text(std::string_view text);
Molecule load_pqr_file(const std::string& path);

/// min_i (|x - c_i| - r_i): negative in the molecule, positive in the solvent.
double signed_distance(const Molecule& mol, const Vec3& x);

/// argmin_i (|x - c_i| - r_i), lowest index on ties. O(N).
std::uint32_t nearest_atom_brute(const Molecule& mol, const Vec3& x);

/// Any sphere contains x (open balls).
bool in_molecule(const Molecule& mol, const Vec3& x);

struct SurfacePoint {
  Vec3 position;
  std::uint32_t atom = 0;
  Vec3 normal;  // outward unit normal of the owning sphere
};

/// Surface point of `atom` in the radial direction of x. Throws
/// NumericalError when x coincides with the atom center.
SurfacePoint radial_projection(const Molecule& mol, std::uint32_t atom, const Vec3& x);

/// Closest point of the molecular surface from x in the solvent: the radial
/// projection onto the nearest atom sphere.
SurfacePoint project_to_surface(const Molecule& mol, const Vec3& x);

/// Two unit vectors completing n to an orthonormal frame, built from the
/// coordinate axis along n's smallest-magnitude component.
std::pair<Vec3, Vec3> tangent_basis(const Vec3& n);

}  // namespace pbwos
