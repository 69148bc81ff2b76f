#include "treemot/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <stdexcept>

#include "treemot/counting.hpp"
#include "treemot/isbp.hpp"
#include "treemot/norm_product.hpp"

namespace treemot {

GraphFamily parse_family(const std::string& name) {
  if (name == "line") return GraphFamily::line;
  if (name == "hmm") return GraphFamily::hmm;
  if (name == "star") return GraphFamily::star;
  if (name == "long-star") return GraphFamily::long_star;
  throw std::invalid_argument("unknown graph family '" + name +
                              "' (expected line, hmm, star or long-star)");
}

std::string to_string(GraphFamily f) {
  switch (f) {
    case GraphFamily::line:
      return "line";
    case GraphFamily::hmm:
      return "hmm";
    case GraphFamily::star:
      return "star";
    case GraphFamily::long_star:
      return "long-star";
  }
  return "unknown";
}

MotProblem make_bench_problem(GraphFamily family, std::size_t J, std::size_t d,
                              std::uint64_t seed, double epsilon) {
  if (J < 2 || d < 2) throw std::invalid_argument("benchmark instances need J >= 2 and d >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 0.1);
  std::uniform_real_distribution<double> weight(0.5, 1.5);

  MotProblem p;
  p.epsilon = epsilon;
  FactorTree& g = p.tree;
  auto pair_cost = [&] {
    std::vector<double> c(d * d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) c[a * d + b] = a == b ? 0.0 : 1.0 + jitter(rng);
    return c;
  };
  std::size_t factor_count = 0;
  auto link = [&](VarIndex a, VarIndex b) {
    g.add_factor("f" + std::to_string(++factor_count), std::vector<VarIndex>{a, b}, pair_cost());
  };
  std::vector<VarIndex> gamma;

  switch (family) {
    case GraphFamily::line: {
      for (std::size_t k = 0; k < J; ++k) g.add_variable("x" + std::to_string(k + 1), d);
      for (std::size_t k = 0; k + 1 < J; ++k) link(k, k + 1);
      gamma = {0, J - 1};
      break;
    }
    case GraphFamily::hmm: {
      const std::size_t steps = J / 2;
      for (std::size_t t = 0; t < steps; ++t) {
        g.add_variable("h" + std::to_string(t + 1), d);
        g.add_variable("y" + std::to_string(t + 1), d);
      }
      for (std::size_t t = 0; t < steps; ++t) {
        link(2 * t, 2 * t + 1);
        if (t + 1 < steps) link(2 * t, 2 * t + 2);
        gamma.push_back(2 * t + 1);
      }
      break;
    }
    case GraphFamily::star: {
      g.add_variable("hub", d);
      for (std::size_t k = 1; k < J; ++k) {
        g.add_variable("x" + std::to_string(k), d);
        link(0, k);
        gamma.push_back(k);
      }
      break;
    }
    case GraphFamily::long_star: {
      const std::size_t branch = (J - 1 + 3) / 4;
      g.add_variable("hub", d);
      for (std::size_t b = 0; b < 4; ++b) {
        VarIndex prev = 0;
        for (std::size_t k = 0; k < branch; ++k) {
          const VarIndex v =
              g.add_variable("b" + std::to_string(b + 1) + "_" + std::to_string(k + 1), d);
          link(prev, v);
          prev = v;
        }
        gamma.push_back(prev);
      }
      break;
    }
  }
  for (VarIndex v : gamma) {
    std::vector<double> mu(d);
    double total = 0.0;
    for (double& x : mu) total += (x = weight(rng));
    for (double& x : mu) x /= total;
    p.constraints[v] = std::move(mu);
  }
  require_valid(p);
  return p;
}

BeliefSet reference_beliefs(const MotProblem& p, std::size_t cap) {
  double volume = 1.0;
  for (std::size_t c : p.tree.cardinalities()) volume *= static_cast<double>(c);
  if (volume <= static_cast<double>(cap)) {
    VanillaOptions options;
    options.cap = cap;
    options.solve.tol = 1e-12;
    options.solve.max_iters = 1'000'000;
    options.gap_tol = 1e-8;
    const VanillaResult r = solve_vanilla_is(p, options);
    return r.beliefs(p.tree);
  }
  SolveOptions options;
  options.tol = 1e-12;
  options.max_iters = 1'000'000;
  return solve_isbp(p, options).beliefs;
}

BenchRow run_bench_cell(const MotProblem& p, const BeliefSet& reference,
                        const std::string& algorithm, const BenchSpec& spec) {
  BenchRow row;
  row.algorithm = algorithm;
  row.J = p.tree.num_variables();
  row.d = p.tree.cardinality(0);
  double last_error = 0.0;
  SolveOptions solve;
  solve.tol = 0.0;
  solve.max_iters = spec.max_iters;
  solve.observer = [&](const IterationReport& r) {
    last_error = relative_node_error(r.beliefs(), reference);
    return last_error <= spec.rel_tol;
  };
  auto record = [&](const SolveStats& stats, const BeliefSet& beliefs) {
    row.iterations = stats.iterations;
    row.wall_seconds = stats.wall_seconds;
    row.rel_error = relative_node_error(beliefs, reference);
    row.status = stats.status == SolveStatus::stopped_by_observer ? "converged" : to_string(stats.status);
    row.beliefs = beliefs;
  };
  try {
    if (algorithm == "vanilla-is") {
      check_dense_cap(p.tree, spec.cap);
      VanillaOptions options;
      options.solve = solve;
      options.cap = spec.cap;
      const VanillaResult r = solve_vanilla_is(p, options);
      record(r.stats, r.beliefs(p.tree));
    } else if (algorithm == "isbp") {
      const IsbpResult r = solve_isbp(p, solve);
      record(r.stats, r.beliefs);
    } else if (algorithm == "cnp") {
      CnpOptions options;
      options.solve = solve;
      options.allow_nonconvex = spec.counting == "bethe";
      const CnpResult r = solve_cnp(p, counting_from_selector(p.tree, spec.counting), options);
      record(r.stats, r.beliefs);
    } else {
      throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
    }
  } catch (const DenseCapError& e) {
    row.status = "skipped";
    row.note = e.what();
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    row.status = "failed";
    row.note = e.what();
  }
  return row;
}

std::vector<BenchRow> run_bench(const BenchSpec& spec) {
  std::vector<BenchRow> rows;
  for (GraphFamily family : spec.families) {
    for (std::size_t J : spec.J) {
      for (std::size_t d : spec.d) {
        for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
          // One instance seed per (family, J, d, rep) cell.
          std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(family), std::uint64_t{J},
                            std::uint64_t{d}, std::uint64_t{rep}};
          std::uint64_t instance_seed = 0;
          seq.generate(reinterpret_cast<std::uint32_t*>(&instance_seed),
                       reinterpret_cast<std::uint32_t*>(&instance_seed) + 2);
          const MotProblem p = make_bench_problem(family, J, d, instance_seed);
          const BeliefSet reference = reference_beliefs(p, spec.cap);
          for (const std::string& algorithm : spec.algorithms) {
            BenchRow row = run_bench_cell(p, reference, algorithm, spec);
            row.family = to_string(family);
            row.J = J;
            row.d = d;
            row.rep = rep;
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "family,J,d,algorithm,rep,iterations,wall_time_s,status,rel_error\n";
  for (const BenchRow& r : rows) {
    out << r.family << ',' << r.J << ',' << r.d << ',' << r.algorithm << ',' << r.rep << ','
        << r.iterations << ',' << std::setprecision(6) << r.wall_seconds << ',' << r.status << ','
        << std::setprecision(6) << r.rel_error << '\n';
  }
}

}  // namespace treemot
