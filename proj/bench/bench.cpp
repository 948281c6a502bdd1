// Serial reference vs OpenMP kernels on the single-atom and dimer cases, plus
// nearest-atom localization on a synthetic molecule.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pbwos/physconst.hpp"
#include "pbwos/solvers.hpp"
#include "pbwos/spatial_index.hpp"
#include "pbwos/synthetic.hpp"

using namespace pbwos;

namespace {

double seconds(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pbwos benchmarks"};
  std::uint64_t samples = 20000;
  int workers = 0;
  std::size_t atoms = 10000, queries = 100000;
  app.add_option("--samples", samples, "samples per solve")->capture_default_str();
  app.add_option("--workers", workers, "OpenMP workers (0: all)")->capture_default_str();
  app.add_option("--atoms", atoms, "synthetic molecule size")->capture_default_str();
  app.add_option("--queries", queries, "localization queries")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  PhysicalConstants pc;
  const PbParameters params = derive_parameters(pc);
  const Molecule single({{{0, 0, 0}, 1.0, 1.0}});
  const Molecule dimer({{{0, 0, 0}, 1.0, 1.0}, {{2.2, 0, 0}, 1.0, -1.0}});

  struct Case {
    std::string name;
    const Molecule* mol;
    Vec3 x;
    JumpScheme scheme;
    bool nonlinear;
    bool stratified;
  };
  const std::vector<Case> cases{
      {"linear single snj h=0.05", &single, {0, 0, 0}, JumpScheme::snj(0.05), false, false},
      {"linear dimer taj(3) h=0.05", &dimer, {-1.5, 0, 0}, JumpScheme::taj(0.05, 3, params.kappa_bar), false, false},
      {"nonlinear single z=1 snj h=0.05", &single, {0, 0, 0}, JumpScheme::snj(0.05), true, false},
      {"nonlinear dimer stratified anj(10) h=0.01", &dimer, {-1.5, 0, 0}, JumpScheme::anj(0.01, 10), true, true}};

  std::printf("workers: %d (default %d)\n", workers > 0 ? workers : default_workers(), default_workers());
  std::printf("%-44s %10s %10s %8s %s\n", "solve", "serial_s", "openmp_s", "speedup", "identical");
  for (const Case& c : cases) {
    SolveRequest r;
    r.molecule = c.mol;
    r.params = params;
    r.points = {c.x};
    r.scheme = c.scheme;
    r.epsilon_shell = 1e-4;
    r.samples = samples;
    r.workers = workers;
    r.stratified = c.stratified;
    r.pilot = 100;
    r.quantity = c.mol == &single ? Quantity::kReactionPotential : Quantity::kPotential;
    std::vector<Estimate> a, b;
    const double ts = seconds([&] { a = c.nonlinear ? solve_nonlinear_serial(r) : solve_linear_serial(r); });
    const double tp = seconds([&] { b = c.nonlinear ? solve_nonlinear(r) : solve_linear(r); });
    std::printf("%-44s %10.3f %10.3f %8.2f %s\n", c.name.c_str(), ts, tp, ts / tp,
                a[0].mean == b[0].mean && a[0].std_error == b[0].std_error ? "yes" : "no");
  }

  const Molecule mol = make_synthetic_molecule(atoms, 1);
  const SpatialIndex index(mol);
  const std::vector<Vec3> q = walk_queries(mol, index, queries, 0.01, 1e-4, params.lambda0, 1);
  std::uint64_t sink = 0;
  const double tb = seconds([&] {
    for (const Vec3& x : q) sink += nearest_atom_brute(mol, x);
  });
  QueryStats st, sh;
  const double tt = seconds([&] {
    for (const Vec3& x : q) sink += index.nearest(x, &st);
  });
  const double th = seconds([&] {
    std::uint32_t h = SpatialIndex::kNoHint;
    for (const Vec3& x : q) sink += h = index.nearest(x, h, &sh);
  });
  const double n = static_cast<double>(q.size());
  std::printf("\nlocalization: %zu atoms, %zu walk queries (checksum %llu)\n", mol.size(), q.size(),
              static_cast<unsigned long long>(sink));
  std::printf("%-10s %12s %14s\n", "method", "ns/query", "evals/query");
  std::printf("%-10s %12.1f %14zu\n", "brute", 1e9 * tb / n, mol.size());
  std::printf("%-10s %12.1f %14.1f\n", "indexed", 1e9 * tt / n, static_cast<double>(st.candidate_evals) / n);
  std::printf("%-10s %12.1f %14.1f\n", "hinted", 1e9 * th / n, static_cast<double>(sh.candidate_evals) / n);
  return 0;
}
