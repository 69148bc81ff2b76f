#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "treemot/factor_graph.hpp"
#include "treemot/tensor.hpp"

namespace treemot {

/// Entropy-regularized multi-marginal transport on a factor tree.
///
/// The factor tables of `tree` are costs C_alpha. Node potentials phi_j act as
/// fixed multiplicative weights on the Gibbs kernel (equivalently a cost of
/// -epsilon * ln phi_j); they are all-ones for plain transport problems.
/// `constraints` maps constrained leaves to their prescribed marginals.
struct MotProblem {
  FactorTree tree;
  double epsilon = 1.0;
  std::map<VarIndex, std::vector<double>> constraints;

  bool is_constrained(VarIndex v) const { return constraints.count(v) != 0; }
};

/// Node and factor marginals, indexed like the tree.
struct BeliefSet {
  std::vector<std::vector<double>> nodes;
  std::vector<DenseTensor> factors;
};

class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kMarginalSumTolerance = 1e-12;
/// |C / epsilon| beyond this overflows or underflows exp() in double precision.
inline constexpr double kMaxScaledCost = 700.0;

/// Tree checks plus the problem invariants (epsilon > 0, constraints on
/// leaves only, probability-vector marginals).
Diagnostics validate(const MotProblem& p);
void require_valid(const MotProblem& p);

/// Gibbs kernels K_alpha = exp(-C_alpha / epsilon); node potentials are copied.
FactorTree to_potentials(const MotProblem& p);

/// Total cost C(x) = sum_alpha C_alpha(x_alpha) - epsilon sum_j ln phi_j(x_j)
/// over all variables in index order.
DenseTensor total_cost(const MotProblem& p);

/// <C, B> + epsilon * sum B ln B for a joint B over all variables (index order).
double free_energy(const MotProblem& p, const DenseTensor& joint);

/// Tree-decomposed free energy of local marginals. Throws ProblemError when
/// the beliefs are not normalized or not compatible within `tolerance`.
double bethe_free_energy(const MotProblem& p, const BeliefSet& beliefs,
                         double tolerance = 1e-6);

/// Largest violation of factor normalization and factor/node compatibility.
double compatibility_violation(const FactorTree& g, const BeliefSet& beliefs);

/// Joint over all variables assembled from tree beliefs,
/// b(x) = prod_alpha b_alpha / prod_j b_j^(N_j - 1).
DenseTensor joint_from_beliefs(const FactorTree& g, const BeliefSet& beliefs,
                               std::size_t max_entries = 10'000'000);

/// Lagrange multipliers recovered from scaling vectors:
/// lambda_j = -epsilon (ln u_j + 1/J).
std::vector<double> multipliers_from_scaling(const MotProblem& p, VarIndex j,
                                             const std::vector<double>& u);

/// Dual objective -epsilon <K, U> - sum_{j in Gamma} lambda_j . mu_j, with
/// <K, U> evaluated by exact sum-product elimination on the tree.
double dual_objective(const MotProblem& p, const std::vector<std::vector<double>>& u);

/// Natural log of sum_x prod_alpha psi_alpha(x_alpha) prod_j w_j(x_j), by
/// leaf elimination in the log domain. Empty `weights` means the node
/// potentials of `g`.
double log_partition(const FactorTree& g,
                     const std::vector<std::vector<double>>& weights = {});

/// Problem file I/O (JSON). Loading validates; errors carry the offending
/// field path and, for syntax errors, the line.
MotProblem load_problem(const std::filesystem::path& path);
MotProblem parse_problem(const std::string& text);
void save_problem(const MotProblem& p, const std::filesystem::path& path);
std::string serialize_problem(const MotProblem& p);

}  // namespace treemot
