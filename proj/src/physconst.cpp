#include "pbwos/physconst.hpp"

#include <cmath>
#include <numbers>

#include "pbwos/error.hpp"

namespace pbwos {

namespace {
constexpr double kMetersPerAngstrom = 1e-10;
constexpr double kLitersPerCubicMeter = 1000.0;
}  // namespace

bool PhysicalConstants::set(std::string_view key, double value) {
  if (key == "boltzmann_constant") {
    boltzmann = value;
  } else if (key == "charge_of_an_electron" || key == "electron_charge") {
    elementary_charge = value;
  } else if (key == "temperature") {
    temperature = value;
  } else if (key == "vacuum_permittivity") {
    vacuum_permittivity = value;
  } else if (key == "avogadro_constant") {
    avogadro = value;
  } else if (key == "molecule_relative_permittivity") {
    eps_in = value;
  } else if (key == "solvent_relative_permittivity") {
    eps_out = value;
  } else if (key == "solvent_ion_concentration") {
    ion_concentration = value;
  } else if (key == "solvent_ion_relative_charge") {
    ion_charge = value;
  } else {
    return false;
  }
  return true;
}

PbParameters derive_parameters(const PhysicalConstants& c) {
  auto require_positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive and finite");
  };
  require_positive(c.boltzmann, "boltzmann_constant");
  require_positive(c.elementary_charge, "charge_of_an_electron");
  require_positive(c.temperature, "temperature");
  require_positive(c.vacuum_permittivity, "vacuum_permittivity");
  require_positive(c.avogadro, "avogadro_constant");
  require_positive(c.eps_in, "molecule_relative_permittivity");
  require_positive(c.eps_out, "solvent_relative_permittivity");
  if (!(c.ion_concentration >= 0.0) || !std::isfinite(c.ion_concentration)) {
    throw ConfigError("solvent_ion_concentration must be non-negative");
  }
  if (std::abs(c.ion_charge) != 1.0) throw ConfigError("solvent_ion_relative_charge must be +1 or -1");

  PbParameters p;
  p.constants = c;
  const double kt = c.boltzmann * c.temperature;
  const double ec2 = c.elementary_charge * c.elementary_charge;
  const double ionic_strength = c.ion_concentration * kLitersPerCubicMeter * c.ion_charge * c.ion_charge;
  const double kappa_si = std::sqrt(2.0 * c.avogadro * ec2 * ionic_strength / (c.vacuum_permittivity * kt));
  p.kappa_bar = kappa_si * kMetersPerAngstrom;
  p.kappa_out = p.kappa_bar / std::sqrt(c.eps_out);
  p.lambda0 = 0.5 * p.kappa_out * p.kappa_out;
  p.source_c = ec2 / (kt * c.vacuum_permittivity) / kMetersPerAngstrom;
  return p;
}

double coulomb_potential(const Molecule& mol, const PbParameters& params, const Vec3& x) {
  double sum = 0.0;
  for (const Atom& a : mol.atoms()) {
    const double d = distance(x, a.center);
    if (d < 1e-12) throw NumericalError("Coulomb potential evaluated at an atom center");
    sum += a.charge / d;
  }
  return params.source_c * sum / (4.0 * std::numbers::pi * params.eps_in());
}

}  // namespace pbwos
