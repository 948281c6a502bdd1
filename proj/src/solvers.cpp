#include "pbwos/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pbwos/error.hpp"
#include "pbwos/stats.hpp"

namespace pbwos {

Quantity parse_quantity(const std::string& name) {
  if (name == "potential") return Quantity::kPotential;
  if (name == "reaction") return Quantity::kReactionPotential;
  throw ConfigError("unknown target '" + name + "' (expected potential or reaction)");
}

const char* quantity_name(Quantity q) { return q == Quantity::kPotential ? "potential" : "reaction"; }

int default_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

ScoreCounters& ScoreCounters::operator+=(const ScoreCounters& o) {
  wos_steps += o.wos_steps;
  uwos_steps += o.uwos_steps;
  crossings += o.crossings;
  particles += o.particles;
  relocations += o.relocations;
  return *this;
}

void SolveRequest::validate() const {
  if (molecule == nullptr) throw ConfigError("no molecule given");
  if (points.empty()) throw ConfigError("no query points given");
  if (samples < 1) throw ConfigError("samples must be at least 1");
  if (block_size < 1) throw ConfigError("block size must be at least 1");
  if (workers < 0) throw ConfigError("workers must be non-negative");
  if (!(epsilon_shell > 0.0)) throw ConfigError("epsilon must be positive");
  scheme.validate();
  if (!(scheme.h > epsilon_shell)) throw ConfigError("jump step h must exceed epsilon");
  if (!(params.lambda0 > 0.0)) throw ConfigError("solvers need a positive ionic strength");
  if (samples / block_size >= (std::uint64_t{1} << 32)) throw ConfigError("too many sample blocks");
  if (points.size() > (std::size_t{1} << 20)) throw ConfigError("too many query points");
}

SolverContext::SolverContext(const Molecule& mol, const PbParameters& params, const JumpScheme& scheme,
                             double epsilon_shell, std::uint64_t max_steps, std::uint64_t max_crossings)
    : mol_(&mol), index_(mol), params_(params), scheme_(scheme), max_crossings_(max_crossings) {
  scheme_.validate();
  cfg_.lambda = params.lambda0;
  cfg_.epsilon_shell = epsilon_shell;
  cfg_.max_steps = max_steps;
  cfg_.validate();
}

namespace {

struct ParticleEnd {
  double score = 0.0;
  bool split = false;
  Vec3 split_point;
};

// Runs one particle until it dies. kSplit selects the branching exterior
// walk, which reports where the particle died.
template <bool kSplit>
ParticleEnd run_particle(const SolverContext& ctx, const Vec3& x0, bool inside, double score, RngStream& rng,
                         ScoreCounters& counters) {
  const SpatialIndex& index = ctx.index();
  const PbParameters& p = ctx.params();
  std::uint32_t hint = SpatialIndex::kNoHint;
  Vec3 x = x0;
  ++counters.particles;
  for (std::uint64_t crossing = 0;; ++crossing) {
    if (crossing >= ctx.max_crossings()) throw NumericalError("walk exceeded the surface crossing cap");
    SurfacePoint sp;
    if (inside) {
      std::uint64_t steps = 0;
      sp = uwos_exit(index, x, rng, ctx.walk_config().max_steps, &steps);
      counters.uwos_steps += steps;
      score -= ctx.u0(sp.position);
    } else {
      const WalkOutcome w = kSplit ? bwos_walk(index, x, ctx.walk_config(), rng, hint)
                                   : wos_walk(index, x, ctx.walk_config(), rng, hint);
      counters.wos_steps += w.steps;
      if (w.kind == WalkOutcome::Kind::kKilled) return {score, false, {}};
      if (w.kind == WalkOutcome::Kind::kSplit) return {score, true, w.split};
      sp = w.exit;
    }
    ++counters.crossings;
    const JumpOutcome j = jump(ctx.scheme(), sp, index, p.eps_in(), p.eps_out(), rng);
    if (j.relocated) ++counters.relocations;
    if (j.kind == JumpOutcome::Kind::kKilled) return {score, false, {}};
    x = j.point;
    inside = j.inside;
    hint = sp.atom;
    if (inside) score += ctx.u0(x);
  }
}

// Initial score: u0(x0) inside for the potential; -u0(x0) outside for u - u0.
double initial_score(const SolverContext& ctx, const Vec3& x0, bool inside, Quantity quantity) {
  if (quantity == Quantity::kPotential) return inside ? ctx.u0(x0) : 0.0;
  return inside ? 0.0 : -ctx.u0(x0);
}

}  // namespace

double linear_walk_score(const SolverContext& ctx, const Vec3& x0, Quantity quantity, RngStream& rng,
                         ScoreCounters* counters) {
  ScoreCounters local;
  const bool inside = ctx.inside(x0);
  const double s0 = initial_score(ctx, x0, inside, quantity);
  const double s = run_particle<false>(ctx, x0, inside, s0, rng, local).score;
  if (counters) *counters += local;
  return s;
}

double branching_walk_score(const SolverContext& ctx, const Vec3& x0, Quantity quantity, RngStream& rng,
                            const GwTree& tree, ScoreCounters* counters) {
  if (ctx.scheme().kind == JumpKind::kTaj) throw ConfigError("the branching estimator supports SNJ and ANJ only");
  const std::size_t n = tree.size();
  if (n == 0 || tree.first_child.size() != n) throw ArgumentError("branching score needs an indexed tree");

  ScoreCounters local;
  std::vector<double> own(n, 0.0);
  std::vector<Vec3> start(n);
  std::vector<std::uint32_t> parent(n, 0);
  std::vector<std::uint8_t> zeroed(n, 0);  // some child value is exactly 0
  std::vector<std::uint32_t> queue;
  queue.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    for (std::uint32_t c = tree.first_child[k]; c < tree.first_child[k] + tree.counts[k]; ++c) parent[c] = k;
  }

  start[0] = x0;
  queue.push_back(0);
  std::vector<std::uint32_t> processed;
  processed.reserve(n);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint32_t k = queue[head];
    if (k != 0 && zeroed[parent[k]]) continue;
    const bool leaf = tree.counts[k] == 0;
    bool inside = false;
    double s0 = 0.0;
    if (k == 0) {
      inside = ctx.inside(x0);
      s0 = initial_score(ctx, x0, inside, quantity);
    }
    // A leaf's death position is irrelevant, so it runs the plain walk.
    const ParticleEnd end = leaf ? run_particle<false>(ctx, start[k], inside, s0, rng, local)
                                 : run_particle<true>(ctx, start[k], inside, s0, rng, local);
    own[k] = end.score;
    processed.push_back(k);
    if (leaf) {
      if (k != 0 && end.score == 0.0) zeroed[parent[k]] = 1;
      continue;
    }
    if (!end.split) throw NumericalError("branching particle died without a split point");
    const std::uint32_t b = tree.first_child[k];
    const std::uint32_t e = b + tree.counts[k];
    for (std::uint32_t c = b; c < e; ++c) start[c] = end.split_point;
    for (std::uint32_t c = b; c < e; ++c) {
      if (tree.counts[c] == 0) queue.push_back(c);
    }
    for (std::uint32_t c = b; c < e; ++c) {
      if (tree.counts[c] != 0) queue.push_back(c);
    }
  }

  // Children are processed after their parent, so a reverse sweep folds
  // every product before it is needed.
  std::vector<double> value(n, 0.0);
  for (auto it = processed.rbegin(); it != processed.rend(); ++it) {
    const std::uint32_t k = *it;
    if (tree.counts[k] == 0 || zeroed[k]) {
      value[k] = own[k];
      continue;
    }
    double prod = 1.0;
    for (std::uint32_t c = tree.first_child[k]; c < tree.first_child[k] + tree.counts[k]; ++c) prod *= value[c];
    value[k] = own[k] - prod;
  }
  if (counters) *counters += local;
  return value[0];
}

// ---------------------------------------------------------------------------

namespace {

struct BlockResult {
  RunningStats stats;
  ScoreCounters counters;
  std::uint64_t zeros = 0;
  std::string error;
};

struct SampleSet {
  RunningStats stats;
  ScoreCounters counters;
  std::uint64_t zeros = 0;
  std::vector<double> scores;
};

// Draws n scores; sample i uses the stream of block i / block_size. Blocks
// are merged in index order, so the result does not depend on scheduling.
template <class ScoreFn>
SampleSet run_samples(std::uint64_t n, std::uint64_t point, std::uint64_t phase, const SolveRequest& req,
                      bool parallel, const ScoreFn& score) {
  SampleSet out;
  out.scores.assign(n, 0.0);
  const std::uint64_t bs = req.block_size;
  const auto n_blocks = static_cast<std::int64_t>((n + bs - 1) / bs);
  std::vector<BlockResult> blocks(static_cast<std::size_t>(n_blocks));

  auto run_block = [&](std::int64_t b) {
    BlockResult& r = blocks[static_cast<std::size_t>(b)];
    try {
      RngStream rng(req.seed, make_stream_id(point, phase, static_cast<std::uint64_t>(b)));
      const std::uint64_t lo = static_cast<std::uint64_t>(b) * bs;
      const std::uint64_t hi = std::min(n, lo + bs);
      for (std::uint64_t i = lo; i < hi; ++i) {
        const double s = score(rng, r.counters);
        out.scores[i] = s;
        r.stats.add(s);
        if (s == 0.0) ++r.zeros;
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  };

  if (parallel) {
    const int workers = req.workers > 0 ? req.workers : default_workers();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::int64_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    for (std::int64_t b = 0; b < n_blocks; ++b) run_block(b);
  }

  for (const BlockResult& r : blocks) {
    if (!r.error.empty()) throw NumericalError(r.error);
    out.stats.merge(r.stats);
    out.counters += r.counters;
    out.zeros += r.zeros;
  }
  return out;
}

std::vector<double> centered_squares(const std::vector<double>& x, double mean, double weight) {
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = weight * (x[i] - mean) * (x[i] - mean);
  return c;
}

template <class PointFn>
std::vector<Estimate> for_each_point(const SolveRequest& req, const PointFn& fn) {
  req.validate();
  std::vector<Estimate> out;
  out.reserve(req.points.size());
  for (std::size_t i = 0; i < req.points.size(); ++i) {
    Estimate est;
    est.point = req.points[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(i, est);
    } catch (const std::exception& e) {
      est = Estimate{};
      est.point = req.points[i];
      est.error = e.what();
    }
    est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(est));
  }
  return out;
}

void fill_plain(Estimate& est, const SampleSet& s) {
  est.mean = s.stats.mean();
  est.std_error = s.stats.std_error();
  est.ci95 = kZ95 * est.std_error;
  est.samples_used = s.stats.count();
  est.zero_score_fraction = static_cast<double>(s.zeros) / static_cast<double>(s.stats.count());
  est.steps_per_sample = static_cast<double>(s.counters.wos_steps + s.counters.uwos_steps) /
                         static_cast<double>(s.stats.count());
  est.variance_explosion = top_percentile_dominates(centered_squares(s.scores, est.mean, 1.0));
}

void check_point(const SolverContext& ctx, const Vec3& x, Quantity q) {
  if (q == Quantity::kReactionPotential && ctx.inside(x)) return;
  for (const Atom& a : ctx.molecule().atoms()) {
    if (distance(x, a.center) < 1e-12) throw ArgumentError("query point coincides with an atom center");
  }
}

std::vector<Estimate> linear_impl(const SolveRequest& req, bool parallel) {
  req.validate();
  const SolverContext ctx(*req.molecule, req.params, req.scheme, req.epsilon_shell, req.max_steps,
                          req.max_crossings);
  return for_each_point(req, [&](std::size_t i, Estimate& est) {
    const Vec3 x0 = req.points[i];
    check_point(ctx, x0, req.quantity);
    const SampleSet s = run_samples(req.samples, i, 0, req, parallel, [&](RngStream& rng, ScoreCounters& c) {
      return linear_walk_score(ctx, x0, req.quantity, rng, &c);
    });
    fill_plain(est, s);
  });
}

// Largest-remainder split of `total` proportional to `weights`.
std::vector<std::uint64_t> allocate(std::uint64_t total, const std::vector<double>& weights) {
  std::vector<std::uint64_t> out(weights.size(), 0);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0) || total == 0) return out;
  std::vector<std::pair<double, std::size_t>> rem;
  std::uint64_t given = 0;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    const double share = static_cast<double>(total) * weights[s] / sum;
    out[s] = static_cast<std::uint64_t>(std::floor(share));
    given += out[s];
    rem.emplace_back(share - std::floor(share), s);
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (std::size_t k = 0; given < total && k < rem.size(); ++k, ++given) {
    if (weights[rem[k].second] > 0.0) ++out[rem[k].second];
  }
  return out;
}

constexpr std::uint64_t kMainPhaseOffset = 2048;

std::vector<Estimate> nonlinear_impl(const SolveRequest& req, bool parallel) {
  req.validate();
  if (req.scheme.kind == JumpKind::kTaj) throw ConfigError("the nonlinear solver supports SNJ and ANJ only");
  const SolverContext ctx(*req.molecule, req.params, req.scheme, req.epsilon_shell, req.max_steps,
                          req.max_crossings);

  if (!req.stratified) {
    return for_each_point(req, [&](std::size_t i, Estimate& est) {
      const Vec3 x0 = req.points[i];
      check_point(ctx, x0, req.quantity);
      const SampleSet s = run_samples(req.samples, i, 0, req, parallel, [&](RngStream& rng, ScoreCounters& c) {
        const GwTree tree = sample_gw_tree(rng);
        return branching_walk_score(ctx, x0, req.quantity, rng, tree, &c);
      });
      fill_plain(est, s);
    });
  }

  const std::uint64_t pilot_cap = std::max<std::uint64_t>(req.pilot, 2);
  const std::size_t max_strata =
      req.max_strata > 0 ? req.max_strata : static_cast<std::size_t>(std::max<std::uint64_t>(1, req.samples / (2 * pilot_cap)));
  const StrataTable table = enumerate_strata(req.tail_mass, max_strata);
  const std::size_t k_strata = table.size();
  if (k_strata + kMainPhaseOffset >= 4096) throw ConfigError("too many strata");
  const std::uint64_t pilot =
      std::max<std::uint64_t>(2, std::min<std::uint64_t>(pilot_cap, req.samples / (2 * k_strata)));

  return for_each_point(req, [&](std::size_t i, Estimate& est) {
    const Vec3 x0 = req.points[i];
    check_point(ctx, x0, req.quantity);
    std::vector<SampleSet> sets;
    std::vector<double> weights;
    for (std::size_t s = 0; s < k_strata; ++s) {
      sets.push_back(run_samples(pilot, i, s + 1, req, parallel, [&](RngStream& rng, ScoreCounters& c) {
        const GwTree tree = table.draw(s, rng);
        return branching_walk_score(ctx, x0, req.quantity, rng, tree, &c);
      }));
      weights.push_back(table[s].probability * std::sqrt(sets.back().stats.variance()));
    }
    const std::uint64_t used = pilot * k_strata;
    const auto extra = allocate(req.samples > used ? req.samples - used : 0, weights);
    for (std::size_t s = 0; s < k_strata; ++s) {
      if (extra[s] == 0) continue;
      SampleSet more = run_samples(extra[s], i, kMainPhaseOffset + s + 1, req, parallel,
                                   [&](RngStream& rng, ScoreCounters& c) {
                                     const GwTree tree = table.draw(s, rng);
                                     return branching_walk_score(ctx, x0, req.quantity, rng, tree, &c);
                                   });
      sets[s].stats.merge(more.stats);
      sets[s].counters += more.counters;
      sets[s].zeros += more.zeros;
      sets[s].scores.insert(sets[s].scores.end(), more.scores.begin(), more.scores.end());
    }

    double mean = 0.0;
    double var = 0.0;
    std::uint64_t n_total = 0;
    std::uint64_t zeros = 0;
    std::uint64_t steps = 0;
    std::vector<double> contrib;
    for (std::size_t s = 0; s < k_strata; ++s) {
      const double p = table[s].probability;
      const RunningStats& st = sets[s].stats;
      const double ns = static_cast<double>(st.count());
      mean += p * st.mean();
      var += p * p * st.variance() / ns;
      n_total += st.count();
      zeros += sets[s].zeros;
      steps += sets[s].counters.wos_steps + sets[s].counters.uwos_steps;
      const auto c = centered_squares(sets[s].scores, st.mean(), p * p / (ns * std::max(ns - 1.0, 1.0)));
      contrib.insert(contrib.end(), c.begin(), c.end());
    }
    est.mean = mean;
    est.std_error = std::sqrt(var);
    est.ci95 = kZ95 * est.std_error;
    est.samples_used = n_total;
    est.zero_score_fraction = static_cast<double>(zeros) / static_cast<double>(n_total);
    est.steps_per_sample = static_cast<double>(steps) / static_cast<double>(n_total);
    est.variance_explosion = top_percentile_dominates(contrib);
    est.strata = k_strata;
  });
}

}  // namespace

std::vector<Estimate> solve_linear(const SolveRequest& req) { return linear_impl(req, true); }
std::vector<Estimate> solve_linear_serial(const SolveRequest& req) { return linear_impl(req, false); }
std::vector<Estimate> solve_nonlinear(const SolveRequest& req) { return nonlinear_impl(req, true); }
std::vector<Estimate> solve_nonlinear_serial(const SolveRequest& req) { return nonlinear_impl(req, false); }

}  // namespace pbwos
