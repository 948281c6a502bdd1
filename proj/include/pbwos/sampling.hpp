#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pbwos/rng.hpp"
#include "pbwos/vec3.hpp"

namespace pbwos {

/// Uniform unit vector (Marsaglia 1972).
Vec3 uniform_direction(RngStream& rng);

/// Uniform point on the sphere S(center, radius). Throws ArgumentError for
/// radius <= 0.
Vec3 uniform_on_sphere(RngStream& rng, const Vec3& center, double radius);

// --- UWOS exit angle ---------------------------------------------------------
// Law of the exit angle alpha (measured from the axis center -> start) of a
// Brownian path started at distance r from the center of a ball of radius R.

double uwos_exit_cdf(double R, double r, double alpha);
/// Closed-form inverse of uwos_exit_cdf.
double uwos_angle_from_uniform(double R, double r, double u);
double uwos_sample_angle(RngStream& rng, double R, double r);

// --- BWOS split radius -------------------------------------------------------
// Distance from the sphere center at which a path killed at rate lambda
// inside B(0, R) dies, conditioned on dying before leaving the ball.
//   F(r) = [sinh(aR) - a r cosh(a(R-r)) - sinh(a(R-r))] / [sinh(aR) - aR],
//   a = sqrt(2 lambda).

double bwos_split_cdf(double R, double lambda, double r);
double bwos_split_density(double R, double lambda, double r);

struct RadiusInversion {
  double radius = 0.0;
  bool used_bisection = false;
};

/// 4 Newton steps from r0 = R u, clamped to [1e-9 R, R - 1e-9 R], with a
/// 60-step bisection fallback when |F(r) - u| > 1e-6 remains.
RadiusInversion bwos_radius_from_uniform(double R, double lambda, double u);
double bwos_sample_radius(RngStream& rng, double R, double lambda);

// --- Offspring law -----------------------------------------------------------

/// Finite offspring distribution sampled by cumulative-table inversion.
class OffspringLaw {
 public:
  struct Entry {
    int count;
    double probability;
  };

  /// Weights need not be normalized; counts must be distinct and >= 0.
  explicit OffspringLaw(std::vector<Entry> weights);

  /// p_0 = 2 - sinh 1, p_{2k+1} = 1/(2k+1)! for k = 1..4, renormalized.
  static const OffspringLaw& standard();

  std::span<const Entry> entries() const { return entries_; }
  double probability(int count) const;
  double mean() const;
  int max_count() const { return entries_.back().count; }
  /// Weight mass dropped by renormalization: 1 - sum(raw weights).
  double excluded_mass() const { return excluded_mass_; }

  int sample(RngStream& rng) const;

 private:
  std::vector<Entry> entries_;  // sorted by count
  std::vector<double> cumulative_;
  double excluded_mass_ = 0.0;
};

int sample_offspring(RngStream& rng);

// --- Galton-Watson trees -----------------------------------------------------

/// Genealogical tree in breadth-first order: node 0 is the root and the
/// children of node k occupy [first_child[k], first_child[k] + counts[k]).
struct GwTree {
  std::vector<std::uint8_t> counts;
  std::vector<std::uint32_t> first_child;

  std::size_t size() const { return counts.size(); }
  /// Longest root-to-leaf edge count; a lone root has height 0.
  int height() const;
  /// Builds first_child from counts. Throws ArgumentError when the counts do
  /// not describe a single finite tree.
  void index();
};

constexpr std::size_t kMaxTreeNodes = 1000000;

/// Breadth-first Galton-Watson sample. Throws NumericalError past max_nodes.
GwTree sample_gw_tree(RngStream& rng, const OffspringLaw& law = OffspringLaw::standard(),
                      std::size_t max_nodes = kMaxTreeNodes);

/// Canonical (unordered) shape key: "0" for a leaf, otherwise
/// "m(k1,k2,...)" with child keys sorted, e.g. "3(0,0,3(0,0,0))".
std::string canonical_shape(const GwTree& tree);

/// Tree in breadth-first order whose canonical shape is `shape`. Throws
/// ArgumentError on malformed keys.
GwTree tree_from_shape(const std::string& shape);

/// Probability that a Galton-Watson tree has the given canonical shape:
/// product over nodes of p_m times the multinomial count of distinct child
/// orderings. Throws ArgumentError when a count is outside the law's support.
double tree_probability(const std::string& shape, const OffspringLaw& law = OffspringLaw::standard());

// --- Strata ------------------------------------------------------------------

struct Stratum {
  std::string shape;  // empty for the tail stratum
  double probability = 0.0;
  bool tail = false;
};

/// Height <= 2 canonical shapes emitted by decreasing probability, plus one
/// tail stratum holding the rest (every unlisted shape, including all trees
/// of height >= 3). The tail is last and is sampled by rejection.
class StrataTable {
 public:
  std::span<const Stratum> strata() const { return strata_; }
  std::size_t size() const { return strata_.size(); }
  const Stratum& operator[](std::size_t i) const { return strata_[i]; }
  const Stratum& tail() const { return strata_.back(); }

  /// Total number of height <= 2 shapes considered before truncation.
  std::size_t candidate_shapes() const { return candidates_; }

  /// True when `tree` belongs to the tail stratum.
  bool in_tail(const GwTree& tree) const;

  /// A tree of stratum i: the fixed shape, or a rejection sample for the tail.
  GwTree draw(std::size_t i, RngStream& rng) const;

 private:
  friend StrataTable enumerate_strata(double, std::size_t, const OffspringLaw&);
  std::vector<Stratum> strata_;
  std::vector<GwTree> trees_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::size_t candidates_ = 0;
  const OffspringLaw* law_ = nullptr;
};

/// Emits strata until the listed mass reaches 1 - tail_mass or max_strata
/// shapes are listed (0 = no cap). tail_mass must lie in (0, 0.01].
StrataTable enumerate_strata(double tail_mass, std::size_t max_strata = 0,
                             const OffspringLaw& law = OffspringLaw::standard());

}  // namespace pbwos
