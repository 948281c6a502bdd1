#include "pbwos/sampling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>

#include "pbwos/error.hpp"

namespace pbwos {

Vec3 uniform_direction(RngStream& rng) {
  double u, v, s;
  do {
    u = 2.0 * rng.uniform() - 1.0;
    v = 2.0 * rng.uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = 2.0 * std::sqrt(1.0 - s);
  return {u * f, v * f, 1.0 - 2.0 * s};
}

Vec3 uniform_on_sphere(RngStream& rng, const Vec3& center, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("uniform_on_sphere: radius must be positive");
  return center + radius * uniform_direction(rng);
}

// ---------------------------------------------------------------------------

namespace {

void check_uwos(double R, double r) {
  if (!(r > 0.0) || !(r < R)) throw ArgumentError("UWOS law requires 0 < r < R");
}

}  // namespace

double uwos_exit_cdf(double R, double r, double alpha) {
  check_uwos(R, r);
  if (alpha <= 0.0) return 0.0;
  if (alpha >= std::numbers::pi) return 1.0;
  const double chord = std::sqrt(R * R - 2.0 * R * r * std::cos(alpha) + r * r);
  const double f = (R * R - r * r) / (2.0 * R * r) * (R / (R - r) - R / chord);
  return std::clamp(f, 0.0, 1.0);
}

double uwos_angle_from_uniform(double R, double r, double u) {
  check_uwos(R, r);
  const double t = R / (R - r) - 2.0 * R * r * u / (R * R - r * r);
  const double s = R / t;
  const double c = (R * R + r * r - s * s) / (2.0 * R * r);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double uwos_sample_angle(RngStream& rng, double R, double r) {
  return uwos_angle_from_uniform(R, r, rng.uniform());
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kSmallA = 1e-4;
constexpr double kLargeA = 20.0;

void check_bwos(double R, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("BWOS law requires lambda > 0");
  if (!(R > 0.0)) throw ArgumentError("BWOS law requires R > 0");
}

// sinh(A) - A without cancellation for small A.
double sinh_minus_id(double A) {
  if (A < 0.1) {
    const double a2 = A * A;
    return A * a2 / 6.0 * (1.0 + a2 / 20.0 * (1.0 + a2 / 42.0 * (1.0 + a2 / 72.0)));
  }
  return std::sinh(A) - A;
}

}  // namespace

double bwos_split_cdf(double R, double lambda, double r) {
  check_bwos(R, lambda);
  if (r <= 0.0) return 0.0;
  if (r >= R) return 1.0;
  const double a = std::sqrt(2.0 * lambda);
  const double A = a * R;
  const double rho = r / R;
  if (A < kSmallA) return 1.0 - (1.0 - rho) * (1.0 - rho) * (1.0 + 2.0 * rho);
  const double s = a * r;
  double f;
  if (A > kLargeA) {
    // Numerator and denominator scaled by 2 e^{-A}.
    const double e2a = std::exp(-2.0 * A);
    const double es = std::exp(-s);
    const double e2as = std::exp(-(2.0 * A - s));
    f = ((1.0 - e2a) - s * (es + e2as) - (es - e2as)) / ((1.0 - e2a) - 2.0 * A * std::exp(-A));
  } else {
    const double b = A - s;
    f = (std::sinh(A) - s * std::cosh(b) - std::sinh(b)) / sinh_minus_id(A);
  }
  return std::clamp(f, 0.0, 1.0);
}

double bwos_split_density(double R, double lambda, double r) {
  check_bwos(R, lambda);
  if (r <= 0.0 || r >= R) return 0.0;
  const double a = std::sqrt(2.0 * lambda);
  const double A = a * R;
  if (A < kSmallA) {
    const double rho = r / R;
    return 6.0 * rho * (1.0 - rho) / R;
  }
  const double s = a * r;
  if (A > kLargeA) {
    return a * s * (std::exp(-s) - std::exp(s - 2.0 * A)) / ((1.0 - std::exp(-2.0 * A)) - 2.0 * A * std::exp(-A));
  }
  return a * s * std::sinh(A - s) / sinh_minus_id(A);
}

RadiusInversion bwos_radius_from_uniform(double R, double lambda, double u) {
  check_bwos(R, lambda);
  const double lo_clamp = 1e-9 * R;
  const double hi_clamp = R - 1e-9 * R;
  double r = std::clamp(R * u, lo_clamp, hi_clamp);
  for (int it = 0; it < 4; ++it) {
    const double f = bwos_split_density(R, lambda, r);
    if (!(f > 0.0)) break;
    r = std::clamp(r - (bwos_split_cdf(R, lambda, r) - u) / f, lo_clamp, hi_clamp);
  }
  if (std::abs(bwos_split_cdf(R, lambda, r) - u) <= 1e-6) return {r, false};

  double lo = 0.0;
  double hi = R;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bwos_split_cdf(R, lambda, mid) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {std::clamp(0.5 * (lo + hi), lo_clamp, hi_clamp), true};
}

double bwos_sample_radius(RngStream& rng, double R, double lambda) {
  return bwos_radius_from_uniform(R, lambda, rng.uniform_open()).radius;
}

// ---------------------------------------------------------------------------

OffspringLaw::OffspringLaw(std::vector<Entry> weights) : entries_(std::move(weights)) {
  if (entries_.empty()) throw ArgumentError("offspring law is empty");
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) { return a.count < b.count; });
  double total = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& e = entries_[i];
    if (e.count < 0 || e.count > 255) throw ArgumentError("offspring count out of range");
    if (i > 0 && entries_[i - 1].count == e.count) throw ArgumentError("duplicate offspring count");
    if (!(e.probability >= 0.0)) throw ArgumentError("negative offspring weight");
    total += e.probability;
  }
  if (!(total > 0.0)) throw ArgumentError("offspring weights sum to zero");
  excluded_mass_ = 1.0 - total;
  double acc = 0.0;
  for (Entry& e : entries_) {
    e.probability /= total;
    acc += e.probability;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;
}

const OffspringLaw& OffspringLaw::standard() {
  static const OffspringLaw law({{0, 2.0 - std::sinh(1.0)},
                                 {3, 1.0 / 6.0},
                                 {5, 1.0 / 120.0},
                                 {7, 1.0 / 5040.0},
                                 {9, 1.0 / 362880.0}});
  return law;
}

double OffspringLaw::probability(int count) const {
  for (const Entry& e : entries_) {
    if (e.count == count) return e.probability;
  }
  return 0.0;
}

double OffspringLaw::mean() const {
  double m = 0.0;
  for (const Entry& e : entries_) m += e.count * e.probability;
  return m;
}

int OffspringLaw::sample(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return entries_[static_cast<std::size_t>(it - cumulative_.begin())].count;
}

int sample_offspring(RngStream& rng) { return OffspringLaw::standard().sample(rng); }

// ---------------------------------------------------------------------------

void GwTree::index() {
  first_child.assign(counts.size(), 0);
  std::size_t next = 1;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (k >= next) throw ArgumentError("offspring counts describe a forest, not a tree");
    first_child[k] = static_cast<std::uint32_t>(next);
    next += counts[k];
  }
  if (next != counts.size()) throw ArgumentError("offspring counts do not match the node count");
}

int GwTree::height() const {
  if (counts.empty()) return -1;
  std::vector<int> depth(counts.size(), 0);
  int h = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::uint32_t c = first_child[k]; c < first_child[k] + counts[k]; ++c) {
      depth[c] = depth[k] + 1;
      h = std::max(h, depth[c]);
    }
  }
  return h;
}

GwTree sample_gw_tree(RngStream& rng, const OffspringLaw& law, std::size_t max_nodes) {
  GwTree tree;
  std::size_t pending = 1;
  while (pending > 0) {
    if (tree.counts.size() >= max_nodes) throw NumericalError("Galton-Watson tree exceeded the node cap");
    const int m = law.sample(rng);
    tree.counts.push_back(static_cast<std::uint8_t>(m));
    pending += static_cast<std::size_t>(m) - 1;
  }
  tree.index();
  return tree;
}

std::string canonical_shape(const GwTree& tree) {
  std::vector<std::string> key(tree.size());
  std::vector<std::string> kids;
  for (std::size_t k = tree.size(); k-- > 0;) {
    const int m = tree.counts[k];
    if (m == 0) {
      key[k] = "0";
      continue;
    }
    kids.clear();
    for (std::uint32_t c = tree.first_child[k]; c < tree.first_child[k] + m; ++c) kids.push_back(std::move(key[c]));
    std::sort(kids.begin(), kids.end());
    std::string s = std::to_string(m) + "(";
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i > 0) s += ',';
      s += kids[i];
    }
    s += ')';
    key[k] = std::move(s);
  }
  return key.empty() ? std::string{} : key[0];
}

namespace {

struct ShapeNode {
  int count = 0;
  std::vector<std::string> children;  // canonical keys as written
};

class ShapeParser {
 public:
  explicit ShapeParser(const std::string& text) : text_(text) {}

  // Parses one node starting at pos_, returning its key substring bounds.
  ShapeNode parse_node(std::size_t& begin, std::size_t& end) {
    begin = pos_;
    ShapeNode node;
    std::size_t digits = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      node.count = node.count * 10 + (text_[pos_] - '0');
      ++pos_;
      if (++digits > 3) fail();
    }
    if (digits == 0) fail();
    if (node.count == 0) {
      end = pos_;
      return node;
    }
    expect('(');
    for (int i = 0; i < node.count; ++i) {
      if (i > 0) expect(',');
      std::size_t cb, ce;
      parse_node(cb, ce);
      node.children.push_back(text_.substr(cb, ce - cb));
    }
    expect(')');
    end = pos_;
    return node;
  }

  ShapeNode parse_root() {
    std::size_t b, e;
    ShapeNode n = parse_node(b, e);
    if (pos_ != text_.size()) fail();
    return n;
  }

 private:
  [[noreturn]] void fail() const { throw ArgumentError("malformed tree shape '" + text_ + "'"); }
  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail();
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

double shape_probability(const std::string& key, const OffspringLaw& law, std::map<std::string, double>& memo) {
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  ShapeParser parser(key);
  const ShapeNode node = parser.parse_root();
  const auto entries = law.entries();
  if (std::none_of(entries.begin(), entries.end(), [&](const auto& e) { return e.count == node.count; })) {
    throw ArgumentError("offspring count " + std::to_string(node.count) + " is outside the law's support");
  }
  double p = law.probability(node.count);
  std::map<std::string, int> multiplicity;
  for (const std::string& c : node.children) ++multiplicity[c];
  // m! / prod(n_t!) distinct orderings of the child multiset.
  double log_orderings = std::lgamma(node.count + 1.0);
  for (const auto& [child, n] : multiplicity) {
    log_orderings -= std::lgamma(n + 1.0);
    p *= std::pow(shape_probability(child, law, memo), n);
  }
  p *= std::round(std::exp(log_orderings));
  memo.emplace(key, p);
  return p;
}

std::string normalize_shape(const std::string& key) {
  // Rebuild through a tree so callers may pass unsorted child lists.
  return canonical_shape(tree_from_shape(key));
}

}  // namespace

GwTree tree_from_shape(const std::string& shape) {
  GwTree tree;
  std::deque<std::string> queue{shape};
  while (!queue.empty()) {
    ShapeParser parser(queue.front());
    const ShapeNode node = parser.parse_root();
    queue.pop_front();
    if (node.count > 255) throw ArgumentError("offspring count too large in shape");
    tree.counts.push_back(static_cast<std::uint8_t>(node.count));
    for (const std::string& c : node.children) queue.push_back(c);
    if (tree.counts.size() > kMaxTreeNodes) throw ArgumentError("tree shape too large");
  }
  tree.index();
  return tree;
}

double tree_probability(const std::string& shape, const OffspringLaw& law) {
  std::map<std::string, double> memo;
  return shape_probability(normalize_shape(shape), law, memo);
}

// ---------------------------------------------------------------------------

bool StrataTable::in_tail(const GwTree& tree) const {
  if (tree.height() > 2) return true;
  const auto it = lookup_.find(canonical_shape(tree));
  return it == lookup_.end();
}

GwTree StrataTable::draw(std::size_t i, RngStream& rng) const {
  if (i >= strata_.size()) throw ArgumentError("stratum index out of range");
  if (!strata_[i].tail) return trees_[i];
  for (int attempt = 0; attempt < 100000000; ++attempt) {
    GwTree t = sample_gw_tree(rng, *law_);
    if (in_tail(t)) return t;
  }
  throw NumericalError("tail stratum rejection sampling did not terminate");
}

StrataTable enumerate_strata(double tail_mass, std::size_t max_strata, const OffspringLaw& law) {
  if (!(tail_mass > 0.0) || tail_mass > 0.01) throw ArgumentError("tail_mass must lie in (0, 0.01]");

  // Child subtrees of a height <= 2 tree: a leaf or a node with leaf children.
  std::vector<std::string> child_keys{"0"};
  for (const auto& e : law.entries()) {
    if (e.count == 0) continue;
    std::string k = std::to_string(e.count) + "(";
    for (int i = 0; i < e.count; ++i) k += i ? ",0" : "0";
    child_keys.push_back(k + ")");
  }
  std::sort(child_keys.begin(), child_keys.end());

  std::vector<std::string> shapes{"0"};
  std::vector<std::size_t> pick;
  for (const auto& e : law.entries()) {
    if (e.count == 0) continue;
    // All non-decreasing index sequences of length m over child_keys.
    pick.assign(static_cast<std::size_t>(e.count), 0);
    while (true) {
      std::string k = std::to_string(e.count) + "(";
      for (std::size_t i = 0; i < pick.size(); ++i) {
        if (i) k += ',';
        k += child_keys[pick[i]];
      }
      shapes.push_back(k + ")");
      std::size_t pos = pick.size();
      while (pos > 0 && pick[pos - 1] == child_keys.size() - 1) --pos;
      if (pos == 0) break;
      const std::size_t v = pick[pos - 1] + 1;
      for (std::size_t i = pos - 1; i < pick.size(); ++i) pick[i] = v;
    }
  }

  std::map<std::string, double> memo;
  std::vector<Stratum> all;
  all.reserve(shapes.size());
  for (const std::string& s : shapes) all.push_back({s, shape_probability(s, law, memo), false});
  std::sort(all.begin(), all.end(), [](const Stratum& a, const Stratum& b) {
    return a.probability > b.probability || (a.probability == b.probability && a.shape < b.shape);
  });

  StrataTable table;
  table.law_ = &law;
  table.candidates_ = all.size();
  double listed = 0.0;
  for (const Stratum& s : all) {
    if (listed >= 1.0 - tail_mass) break;
    if (max_strata > 0 && table.strata_.size() >= max_strata) break;
    table.lookup_.emplace(s.shape, table.strata_.size());
    table.strata_.push_back(s);
    table.trees_.push_back(tree_from_shape(s.shape));
    listed += s.probability;
  }
  table.strata_.push_back({std::string{}, std::max(0.0, 1.0 - listed), true});
  table.trees_.emplace_back();
  return table;
}

}  // namespace pbwos
