#include <doctest.h>

#include "oracles.hpp"
#include "pbwos/error.hpp"
#include "pbwos/jumps.hpp"
#include "pbwos/sampling.hpp"

using namespace pbwos;

namespace {

const double kKappaBar = 2.9132;

struct Tally {
  int out = 0, in = 0, killed = 0;
};

Tally tally(const JumpScheme& s, double eps_in, double eps_out, int n, std::uint64_t seed) {
  const Molecule m({{{0, 0, 0}, 1.0, 1.0}});
  const SpatialIndex idx(m);
  RngStream rng(seed, 0);
  Tally t;
  const SurfacePoint sp{{0, 0, 1}, 0, {0, 0, 1}};
  for (int i = 0; i < n; ++i) {
    const JumpOutcome o = jump(s, sp, idx, eps_in, eps_out, rng);
    if (o.kind == JumpOutcome::Kind::kKilled)
      ++t.killed;
    else if (o.inside)
      ++t.in;
    else
      ++t.out;
  }
  return t;
}

bool within_4_sigma(int count, int n, double p) { return std::abs(double(count) / n - p) < 4 * oracle::binomial_sigma(p, n); }

}  // namespace

TEST_CASE("scheme parsing and validation") {
  CHECK(parse_jump_kind("snj") == JumpKind::kSnj);
  CHECK(parse_jump_kind("taj") == JumpKind::kTaj);
  CHECK_THROWS_AS(parse_jump_kind("xyz"), ConfigError);
  CHECK(JumpScheme::anj(0.1, 3).label() == "anj(3)");
  CHECK(JumpScheme::snj(0.1).label() == "snj");
  CHECK_THROWS_AS(JumpScheme::snj(0.0).validate(), ArgumentError);
  CHECK_THROWS_AS(JumpScheme::anj(0.1, -1).validate(), ArgumentError);
}

TEST_CASE("side frequencies") {
  const int n = 100000;
  Tally t = tally(JumpScheme::snj(0.1), 1.0, 1.0, n, 1);
  CHECK(within_4_sigma(t.out, n, 0.5));
  t = tally(JumpScheme::snj(0.1), 2.0, 80.0, n, 2);
  CHECK(within_4_sigma(t.out, n, 80.0 / 82.0));
  t = tally(JumpScheme::anj(0.1, 10.0), 2.0, 80.0, n, 3);
  CHECK(within_4_sigma(t.out, n, 0.8));
  CHECK(t.killed == 0);
}

TEST_CASE("boundary killing frequency") {
  const int n = 10000000;
  const double kill = 0.5 * kKappaBar * kKappaBar * 0.01;
  const double p = kill / (2.0 + 80.0 + kill);
  CHECK(p == doctest::Approx(5.172e-4).epsilon(1e-3));
  const Tally t = tally(JumpScheme::taj(0.1, 1.0, kKappaBar), 2.0, 80.0, n, 4);
  CHECK(within_4_sigma(t.killed, n, p));
  const double w = 2.0 + 80.0 + kill;
  CHECK(within_4_sigma(t.out, n, 80.0 / w));
}

TEST_CASE("stencil geometry") {
  const SurfacePoint sp{{0.6, 0.8, 0}, 0, {0.6, 0.8, 0}};
  const double h = 0.05;
  for (const JumpScheme& s : {JumpScheme::snj(h), JumpScheme::anj(h, 3.0), JumpScheme::taj(h, 3.0, kKappaBar),
                              JumpScheme::taj(h, 10.0, kKappaBar)}) {
    const JumpStencil st = jump_stencil(s, sp, 2.0, 80.0);
    double total = st.kill_probability;
    for (int k = 0; k < st.size; ++k) {
      total += st.weights[k];
      const double d = distance(st.points[k], sp.position);
      const bool in = k < st.inward;
      const double along = dot(st.points[k] - sp.position, sp.normal);
      CHECK((in ? along < 0 : along > 0));
      double expect = 0;
      switch (s.kind) {
        case JumpKind::kSnj:
          expect = h;
          break;
        case JumpKind::kAnj:
          expect = in ? h : s.alpha * h;
          break;
        case JumpKind::kTaj:
          expect = std::sqrt(3.0) * (in ? h : s.alpha * h);
          break;
      }
      CHECK(d == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("no relocation on a smooth surface") {
  const Molecule m({{{0, 0, 0}, 1.0, 1.0}});
  const SpatialIndex idx(m);
  RngStream rng(10, 0);
  int relocated = 0;
  for (int i = 0; i < 1000000; ++i) {
    const Vec3 n = uniform_direction(rng);
    const SurfacePoint sp{n, 0, n};
    const double h = 0.099 * rng.uniform_open();
    const double alpha = i % 3 == 0 ? 1.0 : (i % 3 == 1 ? 3.0 : 10.0);
    relocated += jump(JumpScheme::taj(h, alpha, kKappaBar), sp, idx, 2.0, 80.0, rng).relocated;
  }
  CHECK(relocated == 0);
}

TEST_CASE("relocation near a seam lands outside") {
  const Molecule m({{{0, 0, 0}, 1.0, 1.0}, {{1.5, 0, 0}, 1.0, -1.0}});
  const SpatialIndex idx(m);
  RngStream rng(11, 0);
  int relocated = 0;
  for (int i = 0; i < 200000; ++i) {
    // points of sphere 0 close to the intersection circle at x = 0.75
    const double phi = 2 * std::numbers::pi * rng.uniform();
    const double x = 0.75 - 0.05 * rng.uniform();
    const double rho = std::sqrt(1 - x * x);
    const Vec3 p{x, rho * std::cos(phi), rho * std::sin(phi)};
    const SurfacePoint sp{p, 0, p};
    const JumpOutcome o = jump(JumpScheme::taj(0.1, 3.0, kKappaBar), sp, idx, 2.0, 80.0, rng);
    if (o.kind != JumpOutcome::Kind::kMoved) continue;
    REQUIRE(o.inside == in_molecule(m, o.point));
    if (o.relocated) {
      ++relocated;
      REQUIRE_FALSE(o.inside);
    }
  }
  CHECK(relocated > 0);
}

TEST_CASE("TAJ one-step replacement is exact on quadratics, third order with a cubic remainder") {
  // Local quadratic harness at x: harmonic interior, exterior Laplacian equal
  // to kappa_out^2 u(x), normal fluxes related by the transmission condition.
  const double eps_in = 2.0, eps_out = 80.0, kb = kKappaBar;
  const double k2 = kb * kb / eps_out;
  const Vec3 x{0.3, -0.2, 1.1};
  const Vec3 n = Vec3{1, 2, 2} * (1.0 / 3.0);
  const SurfacePoint sp{x, 0, n};
  const auto [t1, t2] = tangent_basis(n);
  const double u_x = 0.7, a_in = -1.3, a_out = a_in * eps_in / eps_out;
  const double c_out = k2 * u_x;
  const auto coords = [&](const Vec3& y) {
    const Vec3 d = y - x;
    return std::array<double, 3>{dot(d, n), dot(d, t1), dot(d, t2)};
  };
  // traceless interior Hessian; exterior Hessian with trace c_out
  const auto quad_in = [](const std::array<double, 3>& c) {
    return 0.4 * c[0] * c[0] - 0.1 * c[1] * c[1] - 0.3 * c[2] * c[2] + 0.25 * c[0] * c[1] - 0.6 * c[1] * c[2];
  };
  const auto quad_out = [&](const std::array<double, 3>& c) {
    return 0.5 * (0.2 * c[0] * c[0] + 0.5 * c[1] * c[1] + (c_out - 0.7) * c[2] * c[2]) + 0.35 * c[0] * c[2];
  };

  for (const double cubic : {0.0, 1.0}) {
    const auto u_in = [&](const Vec3& y) {
      const auto c = coords(y);
      return u_x + a_in * c[0] + quad_in(c) + cubic * (0.8 * c[0] * c[0] * c[0] - 0.5 * c[0] * c[1] * c[1]);
    };
    const auto u_out = [&](const Vec3& y) {
      const auto c = coords(y);
      return u_x + a_out * c[0] + quad_out(c) + cubic * (-0.4 * c[0] * c[0] * c[0] + 0.3 * c[0] * c[2] * c[2]);
    };
    for (const double alpha : {1.0, 3.0, 10.0}) {
      std::vector<double> hs{0.1, 0.05, 0.025}, err;
      for (const double h : hs) {
        const JumpStencil st = jump_stencil(JumpScheme::taj(h, alpha, kb), sp, eps_in, eps_out);
        double e = 0.0;
        for (int i = 0; i < st.size; ++i) e += st.weights[i] * (i < st.inward ? u_in(st.points[i]) : u_out(st.points[i]));
        err.push_back(std::abs(e - u_x));
      }
      if (cubic == 0.0) {
        for (const double e : err) CHECK_MESSAGE(e < 1e-12, "alpha=" << alpha);
      } else {
        CHECK_MESSAGE(oracle::loglog_slope(hs, err) >= 2.7, "alpha=" << alpha);
      }
    }
  }
}

TEST_CASE("TAJ on the exact screened solution of a sphere") {
  // Exterior e^{-k s}/s, interior affine with matching value and flux.
  // Curvature terms stay pre-asymptotic until alpha*h is well below 1.
  const double eps_in = 2.0, eps_out = 80.0, kb = kKappaBar;
  const double k = kb / std::sqrt(eps_out);
  const auto u_out = [&](const Vec3& y) {
    const double s = norm(y);
    return std::exp(-k * s) / s;
  };
  const Vec3 n = Vec3{1, 2, 2} * (1.0 / 3.0);
  const SurfacePoint sp{n, 0, n};
  const double u_x = std::exp(-k);
  const double g = eps_out / eps_in * (-std::exp(-k) * (k + 1.0));
  const auto u_in = [&](const Vec3& y) { return u_x + g * dot(y - n, n); };

  const auto slope = [&](double alpha, std::vector<double> hs) {
    std::vector<double> err;
    for (const double h : hs) {
      const JumpStencil st = jump_stencil(JumpScheme::taj(h, alpha, kb), sp, eps_in, eps_out);
      double e = 0.0;
      for (int i = 0; i < st.size; ++i) e += st.weights[i] * (i < st.inward ? u_in(st.points[i]) : u_out(st.points[i]));
      err.push_back(e - u_x);
    }
    return oracle::loglog_slope(hs, err);
  };
  CHECK(slope(1.0, {0.1, 0.05, 0.025}) >= 2.7);
  CHECK(slope(3.0, {0.05, 0.025, 0.0125}) >= 2.7);
}
