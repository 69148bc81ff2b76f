#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "treemot/dense_oracle.hpp"
#include "treemot/mot_problem.hpp"

namespace treemot {

enum class GraphFamily { line, hmm, star, long_star };

GraphFamily parse_family(const std::string& name);
std::string to_string(GraphFamily f);

/// Benchmark instance with J variables (HMM: floor(J/2) hidden/observation
/// pairs; long star: a hub and four chains of ceil((J-1)/4) nodes).
/// Pairwise costs are 0 on the diagonal and 1 + U[0, 0.1] elsewhere; the
/// constrained leaves get random strictly positive marginals.
MotProblem make_bench_problem(GraphFamily family, std::size_t J, std::size_t d,
                              std::uint64_t seed, double epsilon = 1.0);

/// High-accuracy beliefs: dense iterative scaling to duality gap 1e-8 when
/// the joint fits under `cap`, otherwise ISBP run to a 1e-12 residual.
BeliefSet reference_beliefs(const MotProblem& p, std::size_t cap = kDefaultDenseCap);

struct BenchSpec {
  std::vector<GraphFamily> families{GraphFamily::line};
  std::vector<std::size_t> J{4, 6};
  std::vector<std::size_t> d{2};
  std::vector<std::string> algorithms{"vanilla-is", "isbp", "cnp"};
  std::size_t repetitions = 1;
  std::uint64_t seed = 1;
  double rel_tol = 1e-4;
  std::size_t max_iters = 100'000;
  std::size_t cap = kDefaultDenseCap;
  std::string counting = "experiment";
};

struct BenchRow {
  std::string family;
  std::size_t J = 0;
  std::size_t d = 0;
  std::string algorithm;
  std::size_t rep = 0;
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
  /// converged, max_iterations, skipped or failed
  std::string status;
  double rel_error = 0.0;
  std::string note;
  BeliefSet beliefs;
};

/// Runs one algorithm until the relative node-belief error against
/// `reference` drops to `rel_tol`.
BenchRow run_bench_cell(const MotProblem& p, const BeliefSet& reference,
                        const std::string& algorithm, const BenchSpec& spec);

std::vector<BenchRow> run_bench(const BenchSpec& spec);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace treemot
