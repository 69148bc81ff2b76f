#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "treemot/mot_problem.hpp"

namespace treemot {

/// A constrained marginal cannot be matched: the current plan puts no mass
/// on a state that the prescribed marginal requires.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A message or projection came out identically zero.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolveStatus { converged, max_iterations, stopped_by_observer };

std::string to_string(SolveStatus s);

/// Passed to an observer after every outer iteration.
struct IterationReport {
  std::size_t iteration = 0;
  double residual = 0.0;
  double delta = 0.0;
  /// Beliefs of the current iterate, computed on demand. The dense solver
  /// fills node beliefs only.
  std::function<BeliefSet()> beliefs;
};

/// Returning true stops the solve with status stopped_by_observer.
using Observer = std::function<bool(const IterationReport&)>;

struct SolveOptions {
  double tol = 1e-9;
  std::size_t max_iters = 100'000;
  Observer observer;
  bool record_trace = false;
};

struct TracePoint {
  std::size_t iteration = 0;
  double residual = 0.0;
  double delta = 0.0;
};

struct SolveStats {
  SolveStatus status = SolveStatus::max_iterations;
  std::size_t iterations = 0;
  double residual = 0.0;
  double delta = 0.0;
  std::size_t message_updates = 0;
  std::optional<double> duality_gap;
  double wall_seconds = 0.0;
  std::vector<TracePoint> trace;
  std::string stop_rule;

  bool converged() const { return status == SolveStatus::converged; }
};

/// Node and factor marginals of a normalized joint over all variables.
BeliefSet beliefs_from_joint(const FactorTree& g, const DenseTensor& joint);

/// Aggregated relative error sum_j |b_j - ref_j|_1 / sum_j |ref_j|_1 over
/// node beliefs.
double relative_node_error(const BeliefSet& b, const BeliefSet& reference);

/// Largest per-object 1-norm difference over node and factor beliefs.
double max_belief_distance(const BeliefSet& a, const BeliefSet& b);

}  // namespace treemot
