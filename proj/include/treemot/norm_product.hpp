#pragma once

#include <cstddef>
#include <vector>

#include "treemot/counting.hpp"
#include "treemot/mot_problem.hpp"
#include "treemot/solve.hpp"

namespace treemot {

/// Log-domain norm-product messages. log_m[e] is over x_j. log_n[e] is over
/// the factor table of the edge (row-major, scope order) when full[e], and
/// over x_j otherwise (edges with c_{j alpha} = 0).
struct NpMessageState {
  std::vector<std::vector<double>> log_m;
  std::vector<std::vector<double>> log_n;
  std::vector<bool> full;

  /// n = 1 everywhere, m uniform.
  static NpMessageState initial(const FactorTree& g, const CountingNumbers& c);

  /// ln n_{j->alpha} at the factor-table entry `flat`.
  double log_n_at(const FactorTree& g, EdgeIndex e, std::size_t flat) const;
};

/// Exponents used by the updates of one edge.
struct NpExponents {
  double m_inner;             ///< 1 / (eps chat_{j alpha})
  double m_outer;             ///< eps chat_{j alpha}
  double node_power;          ///< 1 / chat_j
  double free_denominator;    ///< 1 / chat_{j alpha}
  double free_outer;          ///< c_alpha
  double constrained_outer;   ///< eps c_alpha
  double factor_power;        ///< -c_{j alpha} / chat_{j alpha}
  double node_belief;         ///< 1 / (eps chat_j)
  double factor_belief;       ///< 1 / (eps c_alpha)
};

NpExponents np_exponents(const FactorTree& g, const CountingNumbers& c, double epsilon,
                         EdgeIndex e);

/// Message updates in the log domain, normalized so the exponentials sum to
/// one. Factor potentials are psi = exp(-C) and node potentials phi^eps, at
/// temperature eps.
std::vector<double> np_update_m(const MotProblem& p, const CountingNumbers& c,
                                const NpMessageState& s, EdgeIndex e);
std::vector<double> np_update_n_free(const MotProblem& p, const CountingNumbers& c,
                                     const NpMessageState& s, EdgeIndex e);
std::vector<double> np_update_n_constrained(const MotProblem& p, const CountingNumbers& c,
                                            const NpMessageState& s, EdgeIndex e,
                                            const std::vector<double>& mu);

struct CnpOptions {
  SolveOptions solve;
  /// Required for counting numbers that fail the convexity conditions.
  bool allow_nonconvex = false;
  /// Variable visiting order; empty means index order.
  std::vector<VarIndex> order;
};

struct CnpResult {
  BeliefSet beliefs;
  NpMessageState state;
  SolveStats stats;
};

/// Constrained norm-product. One iteration visits every variable once.
CnpResult solve_cnp(const MotProblem& p, const CountingNumbers& c, const CnpOptions& options = {});

/// Converged-belief formulas; constrained nodes take their marginal.
BeliefSet cnp_beliefs(const MotProblem& p, const CountingNumbers& c, const NpMessageState& s);

/// b_alpha rebuilt from b_j and the conditional
/// psi_hat^(1/(eps chat)) / sum_{x_alpha \ x_j} psi_hat^(1/(eps chat)).
DenseTensor appendix_factor_belief(const MotProblem& p, const CountingNumbers& c,
                                   const NpMessageState& s, EdgeIndex e,
                                   const std::vector<double>& b_j);

}  // namespace treemot
