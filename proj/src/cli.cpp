#include "treemot/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "treemot/bench.hpp"
#include "treemot/collective.hpp"
#include "treemot/counting.hpp"
#include "treemot/dense_oracle.hpp"
#include "treemot/isbp.hpp"
#include "treemot/norm_product.hpp"

namespace treemot {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct RunConfig {
  std::string algorithm = "isbp";
  double tol = 1e-9;
  std::size_t max_iters = 100'000;
  std::string counting = "uniform";
  bool allow_nonconvex = false;
  std::optional<double> epsilon;
  bool trace = false;
  std::uint64_t seed = 1;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json nested(const DenseTensor& t, std::size_t axis, std::size_t offset) {
  ordered_json arr = ordered_json::array();
  for (std::size_t x = 0; x < t.shape()[axis]; ++x) {
    const std::size_t at = offset + x * t.strides()[axis];
    arr.push_back(axis + 1 == t.rank() ? ordered_json(t[at]) : nested(t, axis + 1, at));
  }
  return arr;
}

ordered_json beliefs_json(const FactorTree& g, const BeliefSet& b) {
  ordered_json doc;
  ordered_json nodes = ordered_json::object();
  for (VarIndex v = 0; v < g.num_variables(); ++v) nodes[g.variable(v).id] = b.nodes[v];
  ordered_json factors = ordered_json::object();
  for (FactorIndex f = 0; f < g.num_factors(); ++f) {
    ordered_json entry;
    ordered_json scope = ordered_json::array();
    for (VarIndex v : g.factor(f).scope) scope.push_back(g.variable(v).id);
    entry["scope"] = std::move(scope);
    entry["values"] = nested(b.factors[f], 0, 0);
    factors[g.factor(f).id] = std::move(entry);
  }
  doc["nodes"] = std::move(nodes);
  doc["factors"] = std::move(factors);
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

int exit_code(const SolveStats& stats) { return stats.converged() ? 0 : 2; }

int cmd_solve(const std::string& problem_path, const fs::path& out_dir, const RunConfig& cfg,
              std::ostream& out) {
  MotProblem p = load_problem(problem_path);
  if (cfg.epsilon) {
    p.epsilon = *cfg.epsilon;
    require_valid(p);
  }
  SolveOptions options;
  options.tol = cfg.tol;
  options.max_iters = cfg.max_iters;
  options.record_trace = cfg.trace;

  BeliefSet beliefs;
  SolveStats stats;
  std::string counting = "none";
  if (cfg.algorithm == "vanilla-is") {
    VanillaOptions vo;
    vo.solve = options;
    VanillaResult r = solve_vanilla_is(p, vo);
    beliefs = r.beliefs(p.tree);
    stats = std::move(r.stats);
  } else if (cfg.algorithm == "isbp") {
    IsbpResult r = solve_isbp(p, options);
    beliefs = std::move(r.beliefs);
    stats = std::move(r.stats);
  } else if (cfg.algorithm == "cnp") {
    CnpOptions co;
    co.solve = options;
    co.allow_nonconvex = cfg.allow_nonconvex;
    counting = cfg.counting;
    CnpResult r = solve_cnp(p, counting_from_selector(p.tree, cfg.counting), co);
    beliefs = std::move(r.beliefs);
    stats = std::move(r.stats);
  } else {
    throw std::invalid_argument("unknown algorithm '" + cfg.algorithm + "'");
  }

  fs::create_directories(out_dir);
  write_text(out_dir / "beliefs.json", beliefs_json(p.tree, beliefs).dump(2) + "\n");
  ordered_json summary;
  summary["algorithm"] = cfg.algorithm;
  summary["counting"] = counting;
  summary["epsilon"] = p.epsilon;
  summary["status"] = to_string(stats.status);
  summary["iterations"] = stats.iterations;
  summary["residual"] = stats.residual;
  summary["delta"] = stats.delta;
  summary["message_updates"] = stats.message_updates;
  summary["duality_gap"] = stats.duality_gap ? ordered_json(*stats.duality_gap) : ordered_json(nullptr);
  summary["wall_seconds"] = stats.wall_seconds;
  summary["tol"] = cfg.tol;
  summary["max_iters"] = cfg.max_iters;
  summary["stop_rule"] = stats.stop_rule;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  if (cfg.trace) {
    std::string csv = "iteration,residual,delta\n";
    for (const TracePoint& t : stats.trace)
      csv += std::to_string(t.iteration) + "," + fmt(t.residual) + "," + fmt(t.delta) + "\n";
    write_text(out_dir / "trace.csv", csv);
  }
  out << cfg.algorithm << ": " << to_string(stats.status) << " after " << stats.iterations
      << " iterations, residual " << fmt(stats.residual) << "\n";
  return exit_code(stats);
}

int cmd_validate(const std::string& problem_path, std::ostream& out) {
  const MotProblem p = load_problem(problem_path);
  out << "ok: " << p.tree.num_variables() << " variables, " << p.tree.num_factors()
      << " factors, " << p.constraints.size() << " constrained leaves\n";
  return 0;
}

struct DemoConfig {
  std::size_t grid = 10;
  std::size_t population = 1000;
  std::size_t steps = 8;
  std::uint64_t seed = 1;
  std::size_t sensors_per_axis = 4;
  double decay = 1.0;
  std::string algorithm = "isbp";
  std::string counting = "experiment";
  double tol = 1e-10;
};

int cmd_demo_collective(const DemoConfig& cfg, const fs::path& out_dir, std::ostream& out) {
  const GridModel model = GridModel::with_side(cfg.grid);
  const SensorArray sensors = SensorArray::lattice(cfg.grid, cfg.sensors_per_axis, cfg.decay);
  const std::vector<double> prior = default_prior(cfg.grid);
  const Simulation sim = simulate(model, sensors, prior, cfg.population, cfg.steps, cfg.seed);
  const MotProblem p = build_filtering_problem(model, sensors, sim.observations, prior);

  SolveOptions options;
  options.tol = cfg.tol;
  BeliefSet beliefs;
  SolveStats stats;
  if (cfg.algorithm == "isbp") {
    IsbpResult r = solve_isbp(p, options);
    beliefs = std::move(r.beliefs);
    stats = std::move(r.stats);
  } else if (cfg.algorithm == "cnp") {
    CnpOptions co;
    co.solve = options;
    co.allow_nonconvex = cfg.counting == "bethe";
    CnpResult r = solve_cnp(p, counting_from_selector(p.tree, cfg.counting), co);
    beliefs = std::move(r.beliefs);
    stats = std::move(r.stats);
  } else {
    throw std::invalid_argument("demo supports isbp or cnp, not '" + cfg.algorithm + "'");
  }
  const auto estimate = occupancy_estimate(p, beliefs);

  fs::create_directories(out_dir);
  const double pop = static_cast<double>(cfg.population);
  std::string truth = "step,cell,mass\n";
  std::string est = "step,cell,mass\n";
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    for (std::size_t c = 0; c < model.cells(); ++c) {
      truth += std::to_string(t + 1) + "," + std::to_string(c) + "," +
               fmt(static_cast<double>(sim.occupancy[t][c]) / pop) + "\n";
      est += std::to_string(t + 1) + "," + std::to_string(c) + "," + fmt(estimate[t][c]) + "\n";
    }
  }
  std::string sens = "step,sensor,x,y,count,mass\n";
  for (std::size_t t = 0; t < cfg.steps; ++t)
    for (std::size_t s = 0; s < sensors.positions.size(); ++s)
      sens += std::to_string(t + 1) + "," + std::to_string(s) + "," + fmt(sensors.positions[s][0]) +
              "," + fmt(sensors.positions[s][1]) + "," +
              std::to_string(sim.observations.counts[t][s]) + "," +
              fmt(static_cast<double>(sim.observations.counts[t][s]) / pop) + "\n";
  write_text(out_dir / "truth.csv", truth);
  write_text(out_dir / "estimate.csv", est);
  write_text(out_dir / "sensors.csv", sens);

  double tv = 0.0;
  double tv_uniform = 0.0;
  const std::vector<double> uniform(model.cells(), 1.0 / static_cast<double>(model.cells()));
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    std::vector<double> truth_t(model.cells());
    for (std::size_t c = 0; c < model.cells(); ++c)
      truth_t[c] = static_cast<double>(sim.occupancy[t][c]) / pop;
    tv += total_variation(estimate[t], truth_t) / static_cast<double>(cfg.steps);
    tv_uniform += total_variation(uniform, truth_t) / static_cast<double>(cfg.steps);
  }

  ordered_json manifest;
  manifest["command"] = "demo collective";
  manifest["grid"] = cfg.grid;
  manifest["population"] = cfg.population;
  manifest["steps"] = cfg.steps;
  manifest["seed"] = cfg.seed;
  manifest["algorithm"] = cfg.algorithm;
  if (cfg.algorithm == "cnp") manifest["counting"] = cfg.counting;
  manifest["tol"] = cfg.tol;
  manifest["epsilon"] = p.epsilon;
  manifest["weights"] = model.weights;
  manifest["force"] = model.force;
  manifest["goal_cell"] = model.goal;
  manifest["sensor_lattice"] = cfg.sensors_per_axis;
  manifest["sensor_decay"] = cfg.decay;
  manifest["prior"] = "two Gaussian blobs at (0.15, 0.15) and (0.5, 0.15) of the side, sigma 0.08 of the side";
  manifest["status"] = to_string(stats.status);
  manifest["iterations"] = stats.iterations;
  manifest["mean_tv_estimate"] = tv;
  manifest["mean_tv_uniform"] = tv_uniform;
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  out << "collective demo: " << to_string(stats.status) << ", mean TV " << fmt(tv)
      << " (uniform baseline " << fmt(tv_uniform) << ")\n";
  return exit_code(stats);
}

int cmd_bench(const BenchSpec& spec, const std::string& out_path, std::ostream& out) {
  const auto rows = run_bench(spec);
  if (out_path.empty() || out_path == "-") {
    write_bench_csv(out, rows);
  } else {
    std::ofstream file(out_path);
    if (!file) throw std::runtime_error("cannot write '" + out_path + "'");
    write_bench_csv(file, rows);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-regularized multi-marginal optimal transport on factor trees"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string problem_path;
  std::string out_dir = ".";
  double epsilon_override = 0.0;
  auto* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->add_option("problem", problem_path, "Problem JSON file")->required();
  solve->add_option("--algorithm", cfg.algorithm, "vanilla-is, isbp or cnp")
      ->check(CLI::IsMember({"vanilla-is", "isbp", "cnp"}));
  solve->add_option("--tol", cfg.tol, "Stopping tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--max-iters", cfg.max_iters, "Iteration limit")->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  solve->add_option("--counting", cfg.counting, "uniform, experiment, bethe or file:<path>");
  solve->add_flag("--allow-nonconvex", cfg.allow_nonconvex, "Accept non-convex counting numbers");
  auto* eps_opt = solve->add_option("--epsilon", epsilon_override, "Override epsilon");
  solve->add_flag("--trace", cfg.trace, "Write trace.csv");
  solve->add_option("--seed", cfg.seed, "Seed (recorded; solves are deterministic)");
  solve->add_option("--out", out_dir, "Output directory");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a problem file");
  validate->add_option("problem", validate_path, "Problem JSON file")->required();

  BenchSpec spec;
  std::vector<std::string> families{"line"};
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Benchmark the solvers on synthetic graph families");
  bench->add_option("--families", families, "line, hmm, star, long-star")->delimiter(',');
  bench->add_option("--J", spec.J, "Variable counts")->delimiter(',');
  bench->add_option("--d", spec.d, "State counts")->delimiter(',');
  bench->add_option("--algorithms", spec.algorithms, "Algorithms")->delimiter(',');
  bench->add_option("--reps", spec.repetitions, "Repetitions");
  bench->add_option("--seed", spec.seed, "Instance seed");
  bench->add_option("--rel-tol", spec.rel_tol, "Relative error stop rule");
  bench->add_option("--max-iters", spec.max_iters, "Iteration limit");
  bench->add_option("--counting", spec.counting, "Counting numbers for cnp");
  bench->add_option("--cap", spec.cap, "Dense joint entry cap");
  bench->add_option("--out", bench_out, "CSV output file (default stdout)");

  DemoConfig demo_cfg;
  std::string demo_out = "collective_out";
  auto* demo = app.add_subcommand("demo", "Demonstrations");
  demo->require_subcommand(1);
  auto* collective = demo->add_subcommand("collective", "Collective-dynamics filtering");
  collective->add_option("--grid", demo_cfg.grid, "Grid side")->check(CLI::Range(2, 1000));
  collective->add_option("--population", demo_cfg.population, "Number of agents")->check(CLI::Range(1, 100'000'000));
  collective->add_option("--steps", demo_cfg.steps, "Time steps")->check(CLI::Range(1, 100'000));
  collective->add_option("--seed", demo_cfg.seed, "Simulation seed");
  collective->add_option("--sensors", demo_cfg.sensors_per_axis, "Sensors per lattice axis");
  collective->add_option("--decay", demo_cfg.decay, "Detection decay per cell")->check(CLI::PositiveNumber);
  collective->add_option("--algorithm", demo_cfg.algorithm, "isbp or cnp")->check(CLI::IsMember({"isbp", "cnp"}));
  collective->add_option("--counting", demo_cfg.counting, "Counting numbers for cnp");
  collective->add_option("--tol", demo_cfg.tol, "Solver tolerance")->check(CLI::PositiveNumber);
  collective->add_option("--out", demo_out, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*solve) {
      if (eps_opt->count() > 0) cfg.epsilon = epsilon_override;
      return cmd_solve(problem_path, out_dir, cfg, out);
    }
    if (*validate) return cmd_validate(validate_path, out);
    if (*bench) {
      spec.families.clear();
      for (const auto& f : families) spec.families.push_back(parse_family(f));
      return cmd_bench(spec, bench_out, out);
    }
    if (*collective) return cmd_demo_collective(demo_cfg, demo_out, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace treemot
