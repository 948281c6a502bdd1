#include <doctest.h>

#include <map>
#include <numbers>

#include "oracles.hpp"
#include "pbwos/error.hpp"
#include "pbwos/sampling.hpp"

using namespace pbwos;

TEST_CASE("points on a sphere") {
  RngStream rng(11, 0);
  const int n = 100000;
  double m[3] = {0, 0, 0}, s[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const Vec3 p = uniform_on_sphere(rng, {0, 0, 0}, 1.0);
    for (int k = 0; k < 3; ++k) {
      m[k] += p[k];
      s[k] += p[k] * p[k];
    }
  }
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(m[k] / n) < 4.0 * std::sqrt(1.0 / 3.0 / n));
    CHECK(s[k] / n == doctest::Approx(1.0 / 3.0).epsilon(0.02));
  }
  for (int i = 0; i < 1000; ++i) CHECK(std::abs(distance(uniform_on_sphere(rng, {5, 0, 0}, 2.0), {5, 0, 0}) - 2.0) < 1e-12);
  CHECK_THROWS_AS(uniform_on_sphere(rng, {0, 0, 0}, 0.0), ArgumentError);
  RngStream a(1, 2), b(1, 2);
  for (int i = 0; i < 100; ++i) CHECK(uniform_direction(a) == uniform_direction(b));
}

TEST_CASE("exit angle law") {
  CHECK(uwos_exit_cdf(2, 1, 0.0) == 0.0);
  CHECK(uwos_exit_cdf(2, 1, std::numbers::pi) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(uwos_exit_cdf(2, 1, std::numbers::pi / 2) == doctest::Approx(0.75 * (2.0 - 2.0 / std::sqrt(5.0))));
  CHECK(uwos_exit_cdf(2, 1, std::numbers::pi / 2) == doctest::Approx(0.829180).epsilon(1e-6));
  CHECK_THROWS_AS(uwos_exit_cdf(1, 1, 0.3), ArgumentError);
  for (auto [R, r] : {std::pair{2.0, 1.0}, {1.0, 0.1}, {1.0, 0.95}, {3.0, 2.0}}) {
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double a = std::numbers::pi * i / 1000;
      const double f = uwos_exit_cdf(R, r, a);
      REQUIRE(f >= prev - 1e-15);
      prev = f;
      if (i % 100 == 50) CHECK(f == doctest::Approx(oracle::exit_angle_cdf(R, r, a)).epsilon(1e-8));
    }
  }
}

TEST_CASE("exit angle inversion") {
  CHECK(uwos_angle_from_uniform(2, 1, 1.0) == doctest::Approx(std::numbers::pi));
  CHECK(uwos_angle_from_uniform(2, 1, 0.0) == doctest::Approx(0.0));
  for (double u : {0.1, 0.37, 0.5, 0.9, 0.999}) {
    CHECK(uwos_exit_cdf(2, 1, uwos_angle_from_uniform(2, 1, u)) == doctest::Approx(u).epsilon(1e-10));
  }
  RngStream rng(3, 1);
  std::vector<double> xs(100000);
  for (double& x : xs) x = uwos_sample_angle(rng, 2.0, 1.0);
  const double d = oracle::ks_statistic(xs, [](double a) { return uwos_exit_cdf(2.0, 1.0, a); });
  CHECK(d < oracle::ks_critical_1pct(xs.size()));
}

TEST_CASE("split radius law") {
  const double lam = 0.5;  // a = 1
  CHECK(bwos_split_cdf(1.0, lam, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(bwos_split_cdf(1.0, lam, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bwos_split_cdf(1.0, lam, 0.5) ==
        doctest::Approx((std::sinh(1.0) - 0.5 * std::cosh(0.5) - std::sinh(0.5)) / (std::sinh(1.0) - 1.0)));
  CHECK(bwos_split_cdf(1.0, lam, 0.5) == doctest::Approx(0.51537).epsilon(1e-4));
  CHECK_THROWS_AS(bwos_split_cdf(1.0, 0.0, 0.5), ArgumentError);

  for (auto [R, l] : {std::pair{1.0, 0.0530437}, {1.0, 0.5}, {3.0, 2.0}, {1e-3, 1e-3}, {40.0, 1.0}}) {
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double r = R * i / 1000;
      const double f = bwos_split_cdf(R, l, r);
      REQUIRE(f >= prev - 1e-15);
      REQUIRE(f <= 1.0 + 1e-15);
      prev = f;
      if (i % 100 == 50 && R < 10) CHECK(f == doctest::Approx(oracle::split_radius_cdf(R, l, r)).epsilon(1e-7));
      if (i > 0 && i < 1000) {
        const double step = 1e-6 * R;
        const double fd = (bwos_split_cdf(R, l, r + step) - bwos_split_cdf(R, l, r - step)) / (2 * step);
        const double dens = bwos_split_density(R, l, r);
        REQUIRE(std::abs(fd - dens) <= 1e-6 * std::max(1.0, dens));
      }
    }
  }
}

TEST_CASE("split radius sampling") {
  const double R = 1.0, lam = 0.0530437;
  CHECK(bwos_radius_from_uniform(R, lam, 1e-12).radius < 1e-4);
  CHECK(bwos_radius_from_uniform(R, lam, 1.0 - 1e-12).radius > 0.999);
  double prev = 0.0;
  for (int i = 1; i < 1000; ++i) {
    const double r = bwos_radius_from_uniform(R, lam, i / 1000.0).radius;
    REQUIRE(r > prev);
    prev = r;
  }
  for (double A : {0.01, 1.0, 5.0, 30.0}) {
    const double l = A * A / 2.0;
    for (double u : {0.01, 0.3, 0.8, 0.999}) {
      const RadiusInversion inv = bwos_radius_from_uniform(1.0, l, u);
      CHECK(bwos_split_cdf(1.0, l, inv.radius) == doctest::Approx(u).epsilon(1e-6));
    }
  }

  RngStream rng(8, 8);
  std::vector<double> xs(100000);
  for (double& x : xs) x = bwos_sample_radius(rng, R, lam);
  CHECK(oracle::ks_statistic(xs, [&](double r) { return bwos_split_cdf(R, lam, r); }) < oracle::ks_critical_1pct(xs.size()));

  // Histogram against the density 2 lambda r sinh((R - r) sqrt(2 lambda)), normalized by quadrature.
  const int bins = 20;
  std::vector<double> counts(bins, 0.0);
  for (double x : xs) counts[std::min(bins - 1, static_cast<int>(x / R * bins))] += 1;
  const double a = std::sqrt(2 * lam);
  const auto dens = [&](double r) { return 2 * lam * r * std::sinh((R - r) * a); };
  const double total = oracle::simpson(dens, 0, R);
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double e = xs.size() * oracle::simpson(dens, b * R / bins, (b + 1) * R / bins, 200) / total;
    chi2 += (counts[b] - e) * (counts[b] - e) / e;
  }
  CHECK(oracle::chi2_upper_tail(chi2, bins - 1) > 0.01);
}

TEST_CASE("offspring law") {
  const OffspringLaw& law = OffspringLaw::standard();
  CHECK(law.probability(0) == doctest::Approx(0.8247988).epsilon(1e-6));
  CHECK(law.probability(3) == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
  CHECK(law.probability(5) == doctest::Approx(1.0 / 120.0).epsilon(1e-6));
  CHECK(law.probability(1) == 0.0);
  CHECK(law.excluded_mass() < 5e-8);
  CHECK(law.excluded_mass() > 0.0);
  CHECK(law.mean() == doctest::Approx(std::cosh(1.0) - 1.0).epsilon(1e-6));

  RngStream rng(21, 0);
  const int n = 1000000;
  std::map<int, int> freq;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const int k = sample_offspring(rng);
    ++freq[k];
    sum += k;
    sum2 += double(k) * k;
  }
  for (const auto& [k, c] : freq) REQUIRE((k == 0 || k == 3 || k == 5 || k == 7 || k == 9));
  for (int k : {0, 3, 5}) {
    const double p = law.probability(k);
    CHECK(std::abs(double(freq[k]) / n - p) < 4 * oracle::binomial_sigma(p, n));
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(mean - (std::cosh(1.0) - 1.0)) < 4 * sd / std::sqrt(double(n)));
}

TEST_CASE("tree sampling") {
  RngStream rng(31, 0);
  const int n = 1000000;
  int single = 0, tall = 0;
  for (int i = 0; i < n; ++i) {
    const GwTree t = sample_gw_tree(rng);
    single += t.size() == 1;
    tall += t.height() >= 3;
  }
  const double p0 = OffspringLaw::standard().probability(0);
  CHECK(std::abs(double(single) / n - p0) < 4 * oracle::binomial_sigma(p0, n));
  const double p_tall = 1.0 - oracle::height_at_most(2);
  CHECK(std::abs(double(tall) / n - p_tall) < 4 * oracle::binomial_sigma(p_tall, n));

  RngStream a(5, 5), b(5, 5);
  for (int i = 0; i < 50; ++i) CHECK(sample_gw_tree(a).counts == sample_gw_tree(b).counts);
}

TEST_CASE("tree bookkeeping") {
  GwTree t;
  t.counts = {3, 0, 3, 0, 0, 0, 0};
  t.index();
  CHECK(t.height() == 2);
  CHECK(t.first_child[0] == 1);
  CHECK(t.first_child[2] == 4);
  CHECK(canonical_shape(t) == "3(0,0,3(0,0,0))");
  const GwTree back = tree_from_shape("3(3(0,0,0),0,0)");
  CHECK(canonical_shape(back) == "3(0,0,3(0,0,0))");
  CHECK(back.height() == 2);
  GwTree bad;
  bad.counts = {3, 0};
  CHECK_THROWS_AS(bad.index(), ArgumentError);
  CHECK_THROWS_AS(tree_from_shape("3(0,0"), ArgumentError);
  CHECK_THROWS_AS(tree_probability("2(0,0)"), ArgumentError);
  GwTree leaf;
  leaf.counts = {0};
  leaf.index();
  CHECK(leaf.height() == 0);
  CHECK(canonical_shape(leaf) == "0");
}

TEST_CASE("shape probabilities") {
  const OffspringLaw& law = OffspringLaw::standard();
  const double p0 = law.probability(0), p3 = law.probability(3), p5 = law.probability(5);
  CHECK(tree_probability("0") == doctest::Approx(0.8247988).epsilon(1e-6));
  CHECK(tree_probability("3(0,0,0)") == doctest::Approx(p3 * p0 * p0 * p0).epsilon(1e-14));
  CHECK(tree_probability("3(0,0,0)") == doctest::Approx(0.09352).epsilon(1e-4));
  CHECK(tree_probability("3(0,0,3(0,0,0))") == doctest::Approx(3 * p3 * p0 * p0 * p3 * p0 * p0 * p0).epsilon(1e-14));
  CHECK(tree_probability("3(0,3(0,0,0),5(0,0,0,0,0))") ==
        doctest::Approx(6 * p3 * p0 * (p3 * std::pow(p0, 3)) * (p5 * std::pow(p0, 5))).epsilon(1e-14));
}

TEST_CASE("strata enumeration") {
  const StrataTable all = enumerate_strata(1e-6);
  CHECK(all.candidate_shapes() == 1207);
  CHECK(all.size() == 1208);
  double listed = 0.0, total = 0.0;
  for (const Stratum& s : all.strata()) {
    total += s.probability;
    if (!s.tail) listed += s.probability;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(listed == doctest::Approx(oracle::height_at_most(2)).epsilon(1e-12));
  CHECK(all.tail().tail);
  CHECK(all[0].shape == "0");
  CHECK(all[1].shape == "3(0,0,0)");
  for (std::size_t i = 1; i + 1 < all.size(); ++i) CHECK(all[i].probability <= all[i - 1].probability);

  const StrataTable few = enumerate_strata(1e-6, 10);
  CHECK(few.size() == 11);
  double t = 0.0;
  for (const Stratum& s : few.strata()) t += s.probability;
  CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(enumerate_strata(0.0), ArgumentError);
  CHECK_THROWS_AS(enumerate_strata(0.5), ArgumentError);
}

TEST_CASE("strata match tree frequencies") {
  const StrataTable table = enumerate_strata(1e-6, 20);
  RngStream rng(77, 0);
  const int n = 400000;
  std::map<std::string, int> freq;
  int tail = 0;
  for (int i = 0; i < n; ++i) {
    const GwTree t = sample_gw_tree(rng);
    if (table.in_tail(t))
      ++tail;
    else
      ++freq[canonical_shape(t)];
  }
  for (std::size_t s = 0; s < 10; ++s) {
    const double p = table[s].probability;
    CHECK_MESSAGE(std::abs(double(freq[table[s].shape]) / n - p) < 4 * oracle::binomial_sigma(p, n), table[s].shape);
  }
  const double pt = table.tail().probability;
  CHECK(std::abs(double(tail) / n - pt) < 4 * oracle::binomial_sigma(pt, n));

  RngStream r2(1, 1);
  for (int i = 0; i < 200; ++i) {
    CHECK(table.in_tail(table.draw(table.size() - 1, r2)));
    CHECK(canonical_shape(table.draw(3, r2)) == table[3].shape);
  }
}
