#pragma once

#include <cstddef>
#include <vector>

#include "treemot/factor_graph.hpp"
#include "treemot/mot_problem.hpp"
#include "treemot/solve.hpp"

namespace treemot {

/// Factor-to-variable (m) and variable-to-factor (n) messages, one vector
/// over x_j per tree edge, each normalized to sum one.
struct MessageState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> n;
  /// Position in the constrained-leaf cycle.
  std::size_t cursor = 0;

  static MessageState uniform(const FactorTree& g);
};

/// m_{alpha->j} = normalized sum_{x_alpha \ x_j} K_alpha prod_{i != j} n_{i->alpha}.
/// `kernels` holds the Gibbs kernels (see to_potentials).
std::vector<double> update_m(const FactorTree& kernels, const MessageState& s, FactorIndex alpha,
                             VarIndex j);
std::vector<double> update_m(const FactorTree& kernels, const MessageState& s, EdgeIndex e);

/// n_{j->alpha} = normalized phi_j prod_{beta != alpha} m_{beta->j}.
std::vector<double> update_n_free(const FactorTree& g, const MessageState& s, VarIndex j,
                                  FactorIndex alpha);
std::vector<double> update_n_free(const FactorTree& g, const MessageState& s, EdgeIndex e);

/// n_{j->alpha} = normalized mu_j ./ m_{alpha->j}, with hard zeros where mu_j is zero.
std::vector<double> update_n_constrained(const FactorTree& g, const MessageState& s, VarIndex j,
                                         FactorIndex alpha, const std::vector<double>& mu);

struct IsbpResult {
  BeliefSet beliefs;
  MessageState state;
  SolveStats stats;
};

/// Iterative scaling belief propagation. One iteration is one full cycle
/// over the constrained leaves.
IsbpResult solve_isbp(const MotProblem& p, const SolveOptions& options = {});

/// Beliefs assembled from a message state.
BeliefSet isbp_beliefs(const MotProblem& p, const FactorTree& kernels, const MessageState& s);

/// Largest 1-norm change of any message under a one-step recomputation.
double residual_theorem1(const MessageState& s, const MotProblem& p);

/// Scaling vectors u_j = n_{j->alpha} / phi_j on the constrained set and
/// exp(-1/J) ones elsewhere, so that K (.) U reproduces the message solution.
std::vector<std::vector<double>> scaling_from_messages(const MotProblem& p,
                                                       const MessageState& s);

}  // namespace treemot
