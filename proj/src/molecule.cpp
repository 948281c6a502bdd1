#include "pbwos/molecule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "pbwos/error.hpp"

namespace pbwos {

Molecule::Molecule(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ArgumentError("molecule has no atoms");
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& a = atoms_[i];
    if (!std::isfinite(a.center.x) || !std::isfinite(a.center.y) || !std::isfinite(a.center.z) ||
        !std::isfinite(a.charge)) {
      throw ArgumentError("atom " + std::to_string(i) + " has non-finite data");
    }
    if (!(a.radius > 0.0) || !std::isfinite(a.radius)) {
      throw ArgumentError("atom " + std::to_string(i) + " has non-positive radius");
    }
    max_radius_ = std::max(max_radius_, a.radius);
  }
}

double Molecule::total_charge() const {
  double q = 0.0;
  for (const Atom& a : atoms_) q += a.charge;
  return q;
}

std::pair<Vec3, Vec3> Molecule::bounding_box() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vec3 lo{inf, inf, inf};
  Vec3 hi{-inf, -inf, -inf};
  for (const Atom& a : atoms_) {
    lo = {std::min(lo.x, a.center.x - a.radius), std::min(lo.y, a.center.y - a.radius),
          std::min(lo.z, a.center.z - a.radius)};
    hi = {std::max(hi.x, a.center.x + a.radius), std::max(hi.y, a.center.y + a.radius),
          std::max(hi.z, a.center.z + a.radius)};
  }
  return {lo, hi};
}

namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

Molecule parse_pqr(std::istream& in) {
  std::vector<Atom> atoms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || (tokens[0] != "ATOM" && tokens[0] != "HETATM")) continue;
    if (tokens.size() < 6) throw ParseError("record has fewer than five numeric fields", line_no);
    double v[5];
    const std::size_t first = tokens.size() - 5;
    for (std::size_t k = 0; k < 5; ++k) {
      if (!parse_double(tokens[first + k], v[k])) {
        throw ParseError("non-numeric field '" + std::string(tokens[first + k]) + "'", line_no);
      }
    }
    if (!(v[4] > 0.0)) throw ParseError("atom radius must be positive", line_no);
    atoms.push_back(Atom{{v[0], v[1], v[2]}, v[4], v[3]});
  }
  if (atoms.empty()) throw ParseError("no ATOM/HETATM records found");
  return Molecule(std::move(atoms));
}

Molecule parse_pqr_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_pqr(in);
}

Molecule load_pqr_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open PQR file '" + path + "'");
  return parse_pqr(in);
}

double signed_distance(const Molecule& mol, const Vec3& x) {
  return atom_gap(x, mol.atom(nearest_atom_brute(mol, x)));
}

std::uint32_t nearest_atom_brute(const Molecule& mol, const Vec3& x) {
  const auto atoms = mol.atoms();
  std::uint32_t best = 0;
  double best_gap = atom_gap(x, atoms[0]);
  for (std::uint32_t i = 1; i < atoms.size(); ++i) {
    const double g = atom_gap(x, atoms[i]);
    if (g < best_gap) {
      best_gap = g;
      best = i;
    }
  }
  return best;
}

bool in_molecule(const Molecule& mol, const Vec3& x) {
  for (const Atom& a : mol.atoms()) {
    if (norm2(x - a.center) < a.radius * a.radius) return true;
  }
  return false;
}

SurfacePoint radial_projection(const Molecule& mol, std::uint32_t atom, const Vec3& x) {
  const Atom& a = mol.atom(atom);
  const Vec3 d = x - a.center;
  const double len = norm(d);
  if (!(len > 0.0)) throw NumericalError("cannot project an atom center onto its sphere");
  const Vec3 n = d * (1.0 / len);
  return SurfacePoint{a.center + a.radius * n, atom, n};
}

SurfacePoint project_to_surface(const Molecule& mol, const Vec3& x) {
  return radial_projection(mol, nearest_atom_brute(mol, x), x);
}

std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
  const double len = norm(n);
  if (!(len > 0.0)) throw ArgumentError("tangent_basis: zero normal");
  if (std::abs(len - 1.0) > 1e-9) throw ArgumentError("tangent_basis: normal is not a unit vector");
  const double ax = std::abs(n.x);
  const double ay = std::abs(n.y);
  const double az = std::abs(n.z);
  Vec3 e;
  if (ax <= ay && ax <= az) {
    e = {1.0, 0.0, 0.0};
  } else if (ay <= az) {
    e = {0.0, 1.0, 0.0};
  } else {
    e = {0.0, 0.0, 1.0};
  }
  Vec3 m = e - dot(e, n) * n;
  m *= 1.0 / norm(m);
  return {m, cross(n, m)};
}

}  // namespace pbwos
