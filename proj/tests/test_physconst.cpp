#include <doctest.h>

#include <numbers>

#include "oracles.hpp"
#include "pbwos/error.hpp"
#include "pbwos/physconst.hpp"

using namespace pbwos;

TEST_CASE("derived parameters from the reference inputs") {
  const PbParameters p = derive_parameters(oracle::table_inputs());
  CHECK(p.kappa_bar == doctest::Approx(oracle::kappa_bar(oracle::table_inputs())).epsilon(1e-12));
  CHECK(p.kappa_bar == doctest::Approx(2.9132).epsilon(1e-3));
  CHECK(p.kappa_out == doctest::Approx(p.kappa_bar / std::sqrt(80.0)).epsilon(1e-12));
  CHECK(p.lambda0 == doctest::Approx(0.5 * p.kappa_out * p.kappa_out).epsilon(1e-12));
  CHECK(p.source_c == doctest::Approx(oracle::source_c(oracle::table_inputs())).epsilon(1e-12));
  CHECK(p.kappa_out == doctest::Approx(0.325717).epsilon(1e-4));
  CHECK(p.lambda0 == doctest::Approx(0.0530458).epsilon(1e-3));
  // eps_out kappa_out^2 == kappa_bar^2
  CHECK(p.eps_out() * p.kappa_out * p.kappa_out == doctest::Approx(p.kappa_bar * p.kappa_bar).epsilon(1e-12));
}

TEST_CASE("kappa scales with sqrt of concentration") {
  PhysicalConstants c = oracle::table_inputs();
  const double k1 = derive_parameters(c).kappa_bar;
  c.ion_concentration = 4.0;
  CHECK(derive_parameters(c).kappa_bar == doctest::Approx(2.0 * k1).epsilon(1e-12));
  c.ion_concentration = 0.0;
  CHECK(derive_parameters(c).kappa_bar == 0.0);
}

TEST_CASE("non-physical inputs are rejected") {
  PhysicalConstants c;
  c.temperature = 0.0;
  CHECK_THROWS_AS(derive_parameters(c), ConfigError);
  c = {};
  c.eps_out = -1.0;
  CHECK_THROWS_AS(derive_parameters(c), ConfigError);
  c = {};
  c.ion_concentration = -0.1;
  CHECK_THROWS_AS(derive_parameters(c), ConfigError);
  c = {};
  c.ion_charge = 2.0;
  CHECK_THROWS_AS(derive_parameters(c), ConfigError);
}

TEST_CASE("set by config key") {
  PhysicalConstants c;
  CHECK(c.set("temperature", 310.0));
  CHECK(c.temperature == 310.0);
  CHECK(c.set("solvent_relative_permittivity", 70.0));
  CHECK(c.eps_out == 70.0);
  CHECK(c.set("molecule_relative_permittivity", 4.0));
  CHECK(c.eps_in == 4.0);
  CHECK(c.set("solvent_ion_concentration", 0.15));
  CHECK(c.ion_concentration == 0.15);
  CHECK_FALSE(c.set("no_such_key", 1.0));
}

TEST_CASE("coulomb potential") {
  const PbParameters p = derive_parameters(oracle::table_inputs());
  const Molecule mol({{{0, 0, 0}, 1.0, 1.0}, {{3, 0, 0}, 1.0, -0.5}});
  const Vec3 x{0, 2, 0};
  const double expect =
      p.source_c / (4.0 * std::numbers::pi * 2.0) * (1.0 / 2.0 - 0.5 / std::sqrt(13.0));
  CHECK(coulomb_potential(mol, p, x) == doctest::Approx(expect).epsilon(1e-13));
  CHECK_THROWS_AS(coulomb_potential(mol, p, {0, 0, 0}), NumericalError);
}
