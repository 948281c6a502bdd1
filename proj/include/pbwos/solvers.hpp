#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pbwos/jumps.hpp"
#include "pbwos/molecule.hpp"
#include "pbwos/physconst.hpp"
#include "pbwos/rng.hpp"
#include "pbwos/sampling.hpp"
#include "pbwos/spatial_index.hpp"
#include "pbwos/walkers.hpp"

namespace pbwos {

/// What a score estimates at the query point: the potential u, or the
/// reaction part u - u0, which stays finite at atom centers.
enum class Quantity { kPotential, kReactionPotential };

Quantity parse_quantity(const std::string& name);
const char* quantity_name(Quantity q);

struct SolveRequest {
  const Molecule* molecule = nullptr;  // must outlive the call
  PbParameters params;
  std::vector<Vec3> points;
  JumpScheme scheme;
  double epsilon_shell = 1e-4;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: all available threads
  bool stratified = false;
  Quantity quantity = Quantity::kPotential;
  std::uint64_t block_size = 4096;  // samples per random stream
  std::uint64_t max_steps = 100000000;
  std::uint64_t max_crossings = 1000000;
  double tail_mass = 1e-6;
  std::uint64_t pilot = 500;
  std::size_t max_strata = 0;  // 0: samples / (2 * pilot)

  /// Throws ConfigError / ArgumentError for unusable requests.
  void validate() const;
};

struct Estimate {
  Vec3 point;
  double mean = 0.0;
  double std_error = 0.0;
  double ci95 = 0.0;  // kZ95 * std_error
  std::uint64_t samples_used = 0;
  double zero_score_fraction = 0.0;
  double steps_per_sample = 0.0;
  double wall_time = 0.0;  // seconds
  bool variance_explosion = false;
  std::size_t strata = 0;  // stratified runs: strata including the tail
  std::string error;       // non-empty when the point failed

  bool ok() const { return error.empty(); }
};

struct ScoreCounters {
  std::uint64_t wos_steps = 0;
  std::uint64_t uwos_steps = 0;
  std::uint64_t crossings = 0;  // surface hits
  std::uint64_t particles = 0;
  std::uint64_t relocations = 0;

  ScoreCounters& operator+=(const ScoreCounters& o);
};

/// Shared read-only state of one solve: molecule, index, parameters and
/// walk configuration.
class SolverContext {
 public:
  SolverContext(const Molecule& mol, const PbParameters& params, const JumpScheme& scheme, double epsilon_shell,
                std::uint64_t max_steps = 100000000, std::uint64_t max_crossings = 1000000);

  const Molecule& molecule() const { return *mol_; }
  const SpatialIndex& index() const { return index_; }
  const PbParameters& params() const { return params_; }
  const JumpScheme& scheme() const { return scheme_; }
  const WalkConfig& walk_config() const { return cfg_; }
  std::uint64_t max_crossings() const { return max_crossings_; }

  bool inside(const Vec3& x) const { return index_.first_containing(x).has_value(); }
  double u0(const Vec3& x) const { return coulomb_potential(*mol_, params_, x); }

 private:
  const Molecule* mol_;
  SpatialIndex index_;
  PbParameters params_;
  JumpScheme scheme_;
  WalkConfig cfg_;
  std::uint64_t max_crossings_;
};

/// One sample of the linear estimator: alternates exact interior exits and
/// killed exterior walks, jumping at every surface hit; u0 differences are
/// accumulated at each crossing until the path is killed.
double linear_walk_score(const SolverContext& ctx, const Vec3& x0, Quantity quantity, RngStream& rng,
                         ScoreCounters* counters = nullptr);

/// One sample of the branching estimator for the genealogy `tree`. Every
/// particle runs the linear loop with split-aware exterior walks; a node's
/// value is its own score minus the product of its children's values.
/// Leaf children are simulated before their siblings so that a zero leaf
/// skips the rest of the family.
double branching_walk_score(const SolverContext& ctx, const Vec3& x0, Quantity quantity, RngStream& rng,
                            const GwTree& tree, ScoreCounters* counters = nullptr);

/// Parallel over sample blocks with OpenMP. For fixed (seed, block_size)
/// the results do not depend on the worker count.
std::vector<Estimate> solve_linear(const SolveRequest& req);
std::vector<Estimate> solve_nonlinear(const SolveRequest& req);

/// Single-threaded reference of the same computations; bit-identical to the
/// parallel versions.
std::vector<Estimate> solve_linear_serial(const SolveRequest& req);
std::vector<Estimate> solve_nonlinear_serial(const SolveRequest& req);

/// Worker count used when a request asks for 0.
int default_workers();

}  // namespace pbwos
