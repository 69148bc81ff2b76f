#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

#include "treemot/factor_graph.hpp"
#include "treemot/mot_problem.hpp"
#include "treemot/solve.hpp"
#include "treemot/tensor.hpp"

namespace treemot {

inline constexpr std::size_t kDefaultDenseCap = 10'000'000;

/// The full joint tensor would exceed the configured entry cap.
class DenseCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Throws DenseCapError naming prod(d_j) when it exceeds `cap`.
void check_dense_cap(const FactorTree& g, std::size_t cap);

/// Unnormalized product prod_j phi_j prod_alpha psi_alpha over all variables
/// in index order.
DenseTensor joint_kernel(const FactorTree& g, std::size_t cap = kDefaultDenseCap);

struct Joint {
  DenseTensor joint;  ///< normalized
  double z = 0.0;
};

Joint full_joint(const FactorTree& g, std::size_t cap = kDefaultDenseCap);

std::vector<double> brute_marginal(const FactorTree& g, VarIndex j,
                                   std::size_t cap = kDefaultDenseCap);

struct ScalingState {
  /// One vector per variable; exp(-1/J) ones off the constrained set.
  std::vector<std::vector<double>> u;
  std::size_t iterations = 0;
  std::map<VarIndex, double> residuals;
};

struct VanillaOptions {
  SolveOptions solve;
  std::size_t cap = kDefaultDenseCap;
  /// When set, convergence also requires duality gap <= gap_tol.
  std::optional<double> gap_tol;
  /// Record the dual objective after every sweep.
  bool record_dual = false;
};

struct VanillaResult {
  DenseTensor plan;  ///< K (.) U normalized to mass one
  ScalingState scaling;
  SolveStats stats;
  std::vector<double> dual_trace;

  BeliefSet beliefs(const FactorTree& g) const { return beliefs_from_joint(g, plan); }
};

/// Iterative scaling on the dense Gibbs kernel, cycling the constrained
/// leaves in index order.
VanillaResult solve_vanilla_is(const MotProblem& p, const VanillaOptions& options = {});

/// Primal objective at normalized K (.) U minus the dual objective.
double duality_gap(const MotProblem& p, const std::vector<std::vector<double>>& u,
                   std::size_t cap = kDefaultDenseCap);

}  // namespace treemot
