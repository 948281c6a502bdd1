#include "pbwos/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbwos/error.hpp"
#include "pbwos/molecule.hpp"
#include "pbwos/reference.hpp"
#include "pbwos/sampling.hpp"
#include "pbwos/solvers.hpp"
#include "pbwos/spatial_index.hpp"
#include "pbwos/stats.hpp"
#include "pbwos/synthetic.hpp"

namespace pbwos::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

const char* const kConstantKeys[] = {
    "boltzmann_constant",          "charge_of_an_electron",         "temperature",
    "vacuum_permittivity",         "avogadro_constant",             "molecule_relative_permittivity",
    "solvent_relative_permittivity", "solvent_ion_concentration",   "solvent_ion_relative_charge",
};

double constant_value(const PhysicalConstants& c, const std::string& key) {
  if (key == "boltzmann_constant") return c.boltzmann;
  if (key == "charge_of_an_electron") return c.elementary_charge;
  if (key == "temperature") return c.temperature;
  if (key == "vacuum_permittivity") return c.vacuum_permittivity;
  if (key == "avogadro_constant") return c.avogadro;
  if (key == "molecule_relative_permittivity") return c.eps_in;
  if (key == "solvent_relative_permittivity") return c.eps_out;
  if (key == "solvent_ion_concentration") return c.ion_concentration;
  return c.ion_charge;
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

Vec3 parse_point(const std::string& text) {
  std::string t = text;
  for (char& c : t) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(t);
  double x, y, z;
  std::string extra;
  if (!(in >> x >> y >> z) || (in >> extra)) throw ConfigError("bad point '" + text + "' (expected x,y,z)");
  return {x, y, z};
}

std::vector<Vec3> read_points_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open points file '" + path + "'");
  std::vector<Vec3> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    try {
      pts.push_back(parse_point(line));
    } catch (const ConfigError&) {
      throw ParseError("bad point in '" + path + "'", line_no);
    }
  }
  return pts;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  j["pqr"] = c.pqr_path.empty() ? std::string() : std::filesystem::absolute(c.pqr_path).lexically_normal().string();
  json pts = json::array();
  for (const Vec3& p : c.points) pts.push_back({p.x, p.y, p.z});
  j["points"] = pts;
  j["jump"] = c.jump;
  j["h"] = c.h;
  j["alpha"] = c.alpha;
  j["epsilon"] = c.epsilon;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["stratified"] = c.stratified;
  j["target"] = c.target;
  j["solver"] = c.solver;
  j["csv"] = c.csv_path;
  j["timing"] = c.timing;
  j["block_size"] = c.block_size;
  j["hs"] = c.hs;
  j["reference"] = c.reference ? json(*c.reference) : json(nullptr);
  j["radius"] = c.radius;
  j["charge"] = c.charge;
  j["model"] = c.model;
  j["grid_points"] = c.grid_points;
  j["atoms"] = c.atoms;
  j["queries"] = c.queries;
  j["tail_mass"] = c.tail_mass;
  j["max_strata"] = c.max_strata;
  j["pilot"] = c.pilot;
  json k;
  for (const char* key : kConstantKeys) k[key] = constant_value(c.constants, key);
  j["constants"] = k;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    c.subcommand = j.at("subcommand").get<std::string>();
    c.pqr_path = j.at("pqr").get<std::string>();
    for (const auto& p : j.at("points")) c.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    c.jump = j.at("jump").get<std::string>();
    c.h = j.at("h").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.samples = j.at("samples").get<std::uint64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.workers = j.at("workers").get<int>();
    c.stratified = j.at("stratified").get<bool>();
    c.target = j.at("target").get<std::string>();
    c.solver = j.at("solver").get<std::string>();
    c.csv_path = j.at("csv").get<std::string>();
    c.timing = j.at("timing").get<bool>();
    c.block_size = j.at("block_size").get<std::uint64_t>();
    c.hs = j.at("hs").get<std::vector<double>>();
    if (!j.at("reference").is_null()) c.reference = j.at("reference").get<double>();
    c.radius = j.at("radius").get<double>();
    c.charge = j.at("charge").get<double>();
    c.model = j.at("model").get<std::string>();
    c.grid_points = j.at("grid_points").get<std::uint64_t>();
    c.atoms = j.at("atoms").get<std::uint64_t>();
    c.queries = j.at("queries").get<std::uint64_t>();
    c.tail_mass = j.at("tail_mass").get<double>();
    c.max_strata = j.at("max_strata").get<std::uint64_t>();
    c.pilot = j.at("pilot").get<std::uint64_t>();
    for (const auto& [key, value] : j.at("constants").items()) {
      if (!c.constants.set(key, value.get<double>())) throw ParseError("unknown constant '" + key + "' in manifest");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
  return c;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw IoError("cannot write '" + path + "'");
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

  void close(const std::string& path) {
    if (!file_.is_open()) return;
    file_.close();
    if (!file_) throw IoError("error writing '" + path + "'");
  }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

struct RunResult {
  json results = json::object();
  int status = 0;
};

SolveRequest make_request(const RunConfig& c, const Molecule& mol, const PbParameters& params) {
  SolveRequest req;
  req.molecule = &mol;
  req.params = params;
  req.points = c.points;
  const JumpKind kind = parse_jump_kind(c.jump);
  req.scheme = JumpScheme{kind, c.h, kind == JumpKind::kSnj ? 1.0 : c.alpha, params.kappa_bar};
  req.epsilon_shell = c.epsilon;
  req.samples = c.samples;
  req.seed = c.seed;
  req.workers = c.workers;
  req.stratified = c.stratified;
  req.quantity = parse_quantity(c.target);
  req.block_size = c.block_size;
  req.tail_mass = c.tail_mass;
  req.max_strata = c.max_strata;
  req.pilot = c.pilot;
  return req;
}

RunResult run_solve(const RunConfig& c, const PbParameters& params, std::ostream& out) {
  if (c.pqr_path.empty()) throw ConfigError("--pqr is required");
  const Molecule mol = load_pqr_file(c.pqr_path);
  const SolveRequest req = make_request(c, mol, params);
  if (c.stratified && c.subcommand != "solve-nonlinear") throw ConfigError("--stratified applies to solve-nonlinear");
  const auto estimates = c.subcommand == "solve-linear" ? solve_linear(req) : solve_nonlinear(req);

  Output csv(c.csv_path, out);
  *csv << "x_A,y_A,z_A,mean_dimensionless,std_error_dimensionless,ci95_dimensionless,samples_count,"
          "zero_score_fraction,steps_per_sample_count,variance_explosion_flag,status";
  if (c.timing) *csv << ",wall_time_s";
  *csv << '\n';
  RunResult r;
  json rows = json::array();
  for (const Estimate& e : estimates) {
    *csv << num(e.point.x) << ',' << num(e.point.y) << ',' << num(e.point.z) << ',';
    if (e.ok()) {
      *csv << num(e.mean) << ',' << num(e.std_error) << ',' << num(e.ci95) << ',' << e.samples_used << ','
           << num(e.zero_score_fraction) << ',' << num(e.steps_per_sample) << ',' << (e.variance_explosion ? 1 : 0)
           << ",ok";
    } else {
      *csv << ",,,,,,," << csv_quote("error: " + e.error);
      r.status = static_cast<int>(ErrorKind::kNumerical);
    }
    if (c.timing) *csv << ',' << num(e.wall_time);
    *csv << '\n';
    rows.push_back({{"point", {e.point.x, e.point.y, e.point.z}},
                    {"mean", e.mean},
                    {"ci95", e.ci95},
                    {"wall_time_s", e.wall_time},
                    {"variance_explosion", e.variance_explosion},
                    {"strata", e.strata},
                    {"error", e.error}});
  }
  csv.close(c.csv_path);
  r.results["estimates"] = rows;
  return r;
}

RunResult run_reference(const RunConfig& c, const PbParameters& params, std::ostream& out) {
  RadialGrid grid = RadialGrid::for_atom(params, c.radius, c.grid_points);
  RadialSolution sol;
  if (c.model == "nonlinear") {
    sol = nonlinear_single_atom(params, c.radius, c.charge, grid);
  } else if (c.model == "linear") {
    sol = linear_radial(params, c.radius, c.charge, grid);
  } else {
    throw ConfigError("unknown model '" + c.model + "' (expected linear or nonlinear)");
  }
  Output csv(c.csv_path, out);
  *csv << "x_A,v_dimensionless\n";
  for (std::size_t i = 0; i < sol.x.size(); ++i) *csv << num(sol.x[i]) << ',' << num(sol.v[i]) << '\n';
  csv.close(c.csv_path);
  RunResult r;
  r.results = {{"reaction_potential_at_center", sol.reaction_potential},
               {"linear_closed_form", linear_single_atom(params, c.radius, c.charge)},
               {"newton_iterations", sol.iterations},
               {"residual", sol.residual},
               {"r_max_A", grid.r_max}};
  return r;
}

RunResult run_convergence(const RunConfig& c, const PbParameters& params, std::ostream& out, std::ostream& err) {
  if (c.pqr_path.empty()) throw ConfigError("--pqr is required");
  if (c.hs.empty()) throw ConfigError("--hs is required for convergence-study");
  if (c.points.size() != 1) throw ConfigError("convergence-study takes exactly one --point");
  const Molecule mol = load_pqr_file(c.pqr_path);
  const bool nonlinear = c.solver == "nonlinear";
  if (!nonlinear && c.solver != "linear") throw ConfigError("--solver must be linear or nonlinear");

  std::optional<double> reference = c.reference;
  if (!reference && mol.size() == 1 && c.target == "reaction" && distance(c.points[0], mol.atom(0).center) < 1e-12) {
    const Atom& a = mol.atom(0);
    reference = nonlinear
                    ? nonlinear_single_atom(params, a.radius, a.charge, RadialGrid::for_atom(params, a.radius))
                          .reaction_potential
                    : linear_single_atom(params, a.radius, a.charge);
  }
  if (!reference) err << "note: no reference value; error columns left empty\n";

  Output csv(c.csv_path, out);
  *csv << "h_A,mean_dimensionless,std_error_dimensionless,ci95_dimensionless,reference_dimensionless,"
          "error_dimensionless,relative_error,samples_count";
  if (c.timing) *csv << ",wall_time_s";
  *csv << '\n';
  RunResult r;
  std::vector<double> hs, errs;
  json rows = json::array();
  for (double h : c.hs) {
    RunConfig ch = c;
    ch.h = h;
    const SolveRequest req = make_request(ch, mol, params);
    const Estimate e = (nonlinear ? solve_nonlinear(req) : solve_linear(req)).at(0);
    *csv << num(h) << ',';
    if (!e.ok()) {
      *csv << ",,,,,," << csv_quote("error: " + e.error);
      r.status = static_cast<int>(ErrorKind::kNumerical);
    } else {
      *csv << num(e.mean) << ',' << num(e.std_error) << ',' << num(e.ci95) << ',';
      if (reference) {
        const double d = e.mean - *reference;
        *csv << num(*reference) << ',' << num(d) << ',' << num(d / std::abs(*reference));
        hs.push_back(h);
        errs.push_back(d);
      } else {
        *csv << ",,";
      }
      *csv << ',' << e.samples_used;
    }
    if (c.timing) *csv << ',' << num(e.wall_time);
    *csv << '\n';
    rows.push_back({{"h", h}, {"mean", e.mean}, {"ci95", e.ci95}, {"wall_time_s", e.wall_time}});
  }
  csv.close(c.csv_path);
  r.results["rows"] = rows;
  if (reference) r.results["reference"] = *reference;
  if (hs.size() >= 2) r.results["loglog_error_slope"] = loglog_slope(hs, errs);
  return r;
}

RunResult run_index_bench(const RunConfig& c, const PbParameters& params, std::ostream& out) {
  const Molecule mol = c.pqr_path.empty() ? make_synthetic_molecule(c.atoms, c.seed) : load_pqr_file(c.pqr_path);
  const SpatialIndex index(mol);

  const double lambda = params.lambda0 > 0.0 ? params.lambda0 : 0.05;
  const std::vector<Vec3> q = walk_queries(mol, index, c.queries, c.h, c.epsilon, lambda, c.seed);

  std::vector<std::uint32_t> brute(q.size()), tree(q.size()), hinted(q.size());
  using clock = std::chrono::steady_clock;
  auto time = [&](auto&& fn) {
    const auto t0 = clock::now();
    fn();
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  QueryStats s_tree, s_hint;
  const double t_brute = time([&] {
    for (std::size_t i = 0; i < q.size(); ++i) brute[i] = nearest_atom_brute(mol, q[i]);
  });
  const double t_tree = time([&] {
    for (std::size_t i = 0; i < q.size(); ++i) tree[i] = index.nearest(q[i], &s_tree);
  });
  const double t_hint = time([&] {
    std::uint32_t h = SpatialIndex::kNoHint;
    for (std::size_t i = 0; i < q.size(); ++i) h = hinted[i] = index.nearest(q[i], h, &s_hint);
  });
  std::size_t mis_tree = 0, mis_hint = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    mis_tree += tree[i] != brute[i];
    mis_hint += hinted[i] != brute[i];
  }

  const double n = static_cast<double>(q.size());
  Output csv(c.csv_path, out);
  *csv << "method,mean_query_ns,candidates_per_query_count,hint_hit_fraction,mismatches_count\n";
  *csv << "brute," << num(1e9 * t_brute / n) << ',' << mol.size() << ",0,0\n";
  *csv << "indexed," << num(1e9 * t_tree / n) << ',' << num(static_cast<double>(s_tree.candidate_evals) / n)
       << ",0," << mis_tree << '\n';
  *csv << "hinted," << num(1e9 * t_hint / n) << ',' << num(static_cast<double>(s_hint.candidate_evals) / n) << ','
       << num(static_cast<double>(s_hint.hint_hits) / n) << ',' << mis_hint << '\n';
  csv.close(c.csv_path);

  RunResult r;
  const auto& bs = index.build_stats();
  r.results = {{"atoms", mol.size()},
               {"index_nodes", bs.nodes},
               {"index_depth", bs.depth},
               {"neighbor_entries", bs.neighbor_entries},
               {"build_seconds", bs.build_seconds},
               {"mismatches", mis_tree + mis_hint}};
  if (mis_tree + mis_hint > 0) r.status = static_cast<int>(ErrorKind::kNumerical);
  return r;
}

RunResult run_strata(const RunConfig& c, std::ostream& out) {
  const StrataTable table = enumerate_strata(c.tail_mass, c.max_strata);
  Output csv(c.csv_path, out);
  *csv << "index,shape,probability\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    *csv << i << ',' << (table[i].tail ? "tail" : table[i].shape) << ',' << num(table[i].probability) << '\n';
  }
  csv.close(c.csv_path);
  RunResult r;
  r.results = {{"strata", table.size()}, {"candidate_shapes", table.candidate_shapes()}};
  return r;
}

std::string default_manifest_path(const RunConfig& c) {
  if (!c.manifest_path.empty()) return c.manifest_path;
  if (!c.csv_path.empty()) return c.csv_path + ".manifest.json";
  return "pbwos-manifest.json";
}

}  // namespace

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const PbParameters params = derive_parameters(c.constants);
    RunResult r;
    if (c.subcommand == "solve-linear" || c.subcommand == "solve-nonlinear") {
      r = run_solve(c, params, out);
    } else if (c.subcommand == "reference") {
      r = run_reference(c, params, out);
    } else if (c.subcommand == "convergence-study") {
      r = run_convergence(c, params, out, err);
    } else if (c.subcommand == "index-bench") {
      r = run_index_bench(c, params, out);
    } else if (c.subcommand == "strata") {
      r = run_strata(c, out);
    } else {
      throw ConfigError("unknown subcommand '" + c.subcommand + "'");
    }

    json manifest;
    manifest["tool"] = "pbwos";
    manifest["version"] = kVersion;
    manifest["config"] = config_to_json(c);
    manifest["derived"] = {{"kappa_bar_per_A", params.kappa_bar},
                           {"kappa_out_per_A", params.kappa_out},
                           {"lambda0_per_A2", params.lambda0},
                           {"source_c_A", params.source_c}};
    manifest["results"] = r.results;
    manifest["build"] = {{"compiler", __VERSION__}, {"cxx_standard", __cplusplus}, {"threads", default_workers()}};
    manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string mpath = default_manifest_path(c);
    std::ofstream m(mpath);
    if (!m) throw IoError("cannot write manifest '" + mpath + "'");
    m << manifest.dump(2) << '\n';
    if (!m) throw IoError("error writing manifest '" + mpath + "'");
    for (const auto& e : r.results.value("estimates", json::array())) {
      if (!e["error"].get<std::string>().empty()) err << "error: " << e["error"].get<std::string>() << '\n';
    }
    return r.status;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Walk-on-spheres Poisson-Boltzmann solver", "pbwos"};
  app.set_config("--config", "", "key = value file; command-line flags take precedence");
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<std::string> point_args;
  std::string points_file;
  std::string replay_path;
  std::optional<double> reference;

  app.add_option("--pqr", c.pqr_path, "molecule in PQR format");
  app.add_option("--point", point_args, "query point x,y,z in A (repeatable)");
  app.add_option("--points-file", points_file, "file with one x y z point per line");
  app.add_option("--jump", c.jump, "boundary jump: snj, anj or taj")->check(CLI::IsMember({"snj", "anj", "taj"}));
  app.add_option("--h", c.h, "jump step in A")->capture_default_str();
  app.add_option("--alpha", c.alpha, "jump asymmetry for anj and taj")->capture_default_str();
  app.add_option("--epsilon", c.epsilon, "WOS stopping shell in A")->capture_default_str();
  app.add_option("--samples", c.samples, "Monte Carlo samples per point")->capture_default_str();
  app.add_option("--seed", c.seed, "random seed")->capture_default_str();
  app.add_option("--workers", c.workers, "threads (0: all available)")->capture_default_str();
  app.add_flag("--stratified", c.stratified, "stratify the nonlinear estimator by tree shape");
  app.add_option("--target", c.target, "potential (u) or reaction (u - u0)")
      ->check(CLI::IsMember({"potential", "reaction"}));
  app.add_option("--solver", c.solver, "convergence-study estimator: linear or nonlinear");
  app.add_option("--csv", c.csv_path, "CSV output path (default: standard output)");
  app.add_option("--manifest", c.manifest_path, "JSON manifest path");
  app.add_flag("--timing", c.timing, "add a wall_time_s column to CSV output");
  app.add_option("--block-size", c.block_size, "samples per random stream")->capture_default_str();
  app.add_option("--hs", c.hs, "h values for convergence-study")->delimiter(',');
  app.add_option("--reference", reference, "reference value for convergence-study errors");
  app.add_option("--radius", c.radius, "reference: atom radius in A")->capture_default_str();
  app.add_option("--charge", c.charge, "reference: atom charge")->capture_default_str();
  app.add_option("--model", c.model, "reference: linear or nonlinear")->capture_default_str();
  app.add_option("--grid-points", c.grid_points, "reference: radial grid size")->capture_default_str();
  app.add_option("--atoms", c.atoms, "index-bench: synthetic molecule size")->capture_default_str();
  app.add_option("--queries", c.queries, "index-bench: number of queries")->capture_default_str();
  app.add_option("--tail-mass", c.tail_mass, "strata: probability left to the tail stratum")->capture_default_str();
  app.add_option("--max-strata", c.max_strata, "strata: cap on listed shapes (0: automatic)");
  app.add_option("--pilot", c.pilot, "strata: pilot samples per stratum")->capture_default_str();
  for (const char* key : kConstantKeys) {
    app.add_option_function<double>(
           std::string("--") + key, [&c, key](double v) { c.constants.set(key, v); }, "physical constant")
        ->group("Physical constants");
  }

  app.add_subcommand("solve-linear", "linearized PB estimate at each point");
  app.add_subcommand("solve-nonlinear", "nonlinear PB estimate at each point (branching walks)");
  app.add_subcommand("reference", "radial single-atom reference solution as CSV");
  app.add_subcommand("convergence-study", "sweep h and report errors against a reference");
  app.add_subcommand("index-bench", "time brute, indexed and hinted nearest-atom queries");
  app.add_subcommand("strata", "list the tree-shape strata and their probabilities");
  auto* replay = app.add_subcommand("replay", "re-run the configuration stored in a manifest");
  replay->add_option("manifest_in", replay_path, "manifest written by an earlier run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return static_cast<int>(ErrorKind::kConfig);
  }

  try {
    if (replay->parsed()) {
      std::ifstream in(replay_path);
      if (!in) throw IoError("cannot open manifest '" + replay_path + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
      }
      RunConfig stored = config_from_json(j.at("config"));
      if (!app.get_option("--csv")->empty()) stored.csv_path = c.csv_path;
      stored.manifest_path = c.manifest_path;
      if (!app.get_option("--workers")->empty()) stored.workers = c.workers;
      return run(stored, out, err);
    }
    c.subcommand = app.get_subcommands().front()->get_name();
    c.reference = reference;
    for (const std::string& p : point_args) c.points.push_back(parse_point(p));
    if (!points_file.empty()) {
      const auto more = read_points_file(points_file);
      c.points.insert(c.points.end(), more.begin(), more.end());
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    err << "error: malformed manifest: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kParse);
  }
  return run(c, out, err);
}

}  // namespace pbwos::cli
