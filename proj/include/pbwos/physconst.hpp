#pragma once

#include <string>
#include <string_view>

#include "pbwos/molecule.hpp"
#include "pbwos/vec3.hpp"

namespace pbwos {

/// SI inputs of the model. Defaults are the reference simulation values.
struct PhysicalConstants {
  double boltzmann = 1.3806488e-23;           // J/K
  double elementary_charge = 1.602176565e-19;  // C
  double temperature = 298.0;                  // K
  double vacuum_permittivity = 8.854187817e-12;  // F/m
  double avogadro = 6.02214129e23;             // 1/mol
  double eps_in = 2.0;
  double eps_out = 80.0;
  double ion_concentration = 1.0;  // mol/L, one species of a symmetric salt
  double ion_charge = 1.0;         // +-1

  /// Sets the field named by a config key (e.g. "temperature",
  /// "solvent_relative_permittivity"). Returns false for unknown keys.
  bool set(std::string_view key, double value);
};

/// Derived, angstrom-based parameters. Immutable; share freely.
struct PbParameters {
  PhysicalConstants constants;
  double kappa_bar = 0.0;  // 1/A, inverse Debye length
  double kappa_out = 0.0;  // 1/A, kappa_bar / sqrt(eps_out)
  double lambda0 = 0.0;    // 1/A^2, exterior killing rate kappa_out^2 / 2
  double source_c = 0.0;   // A, e_c^2 / (k_B T eps_0)

  double eps_in() const { return constants.eps_in; }
  double eps_out() const { return constants.eps_out; }
};

/// Throws ConfigError on non-physical constants. kappa_bar uses the ionic
/// strength c z^2 in mol/m^3; eps_out enters only through kappa_out.
PbParameters derive_parameters(const PhysicalConstants& constants);

/// Coulomb potential of the fixed charges in a uniform eps_in medium:
/// source_c * sum_i z_i / (4 pi eps_in |x - c_i|). Throws NumericalError when
/// x is within 1e-12 A of a center.
double coulomb_potential(const Molecule& mol, const PbParameters& params, const Vec3& x);

}  // namespace pbwos
