#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pbwos/physconst.hpp"
#include "pbwos/vec3.hpp"

namespace pbwos::cli {

/// Fully resolved run description. The JSON manifest stores exactly this,
/// and `replay` rebuilds it from there.
struct RunConfig {
  std::string subcommand;
  std::string pqr_path;
  std::vector<Vec3> points;
  std::string jump = "snj";
  double h = 0.1;
  double alpha = 3.0;
  double epsilon = 1e-4;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 1;
  int workers = 0;
  bool stratified = false;
  std::string target = "potential";
  std::string solver = "linear";  // convergence-study: linear | nonlinear
  std::string csv_path;           // empty: standard output
  std::string manifest_path;      // empty: <csv>.manifest.json or pbwos-manifest.json
  bool timing = false;
  std::uint64_t block_size = 4096;
  std::vector<double> hs;
  std::optional<double> reference;
  double radius = 1.0;
  double charge = 1.0;
  std::string model = "nonlinear";  // reference: linear | nonlinear
  std::uint64_t grid_points = 20000;
  std::uint64_t atoms = 10000;
  std::uint64_t queries = 100000;
  double tail_mass = 1e-6;
  std::uint64_t max_strata = 0;
  std::uint64_t pilot = 500;
  PhysicalConstants constants;
};

/// Executes a resolved configuration; returns the process exit status
/// (0 success, 1 config, 2 parse, 3 numerical, 4 I/O).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses the command line (and any --config file) and runs it.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pbwos::cli
