#include "treemot/solve.hpp"

#include <algorithm>
#include <cmath>

#include "log_math.hpp"

namespace treemot {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max_iterations";
    case SolveStatus::stopped_by_observer:
      return "stopped_by_observer";
  }
  return "unknown";
}

BeliefSet beliefs_from_joint(const FactorTree& g, const DenseTensor& joint) {
  BeliefSet out;
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    const DenseTensor marginal = project(joint, v);
    out.nodes.emplace_back(marginal.values().begin(), marginal.values().end());
  }
  for (const Factor& f : g.factors()) {
    DenseTensor marginal = contract_marginal(joint, f.scope);
    // contract_marginal keeps the joint's axis order; reorder to scope order.
    if (marginal.scope() != f.scope) {
      DenseTensor reordered(f.scope, f.table.shape(), 0.0);
      for (std::size_t k = 0; k < reordered.size(); ++k) {
        std::vector<std::size_t> idx(marginal.rank());
        for (std::size_t a = 0; a < f.scope.size(); ++a)
          idx[marginal.axis_of(f.scope[a])] = reordered.coordinate(k, a);
        reordered[k] = marginal.at(idx);
      }
      marginal = std::move(reordered);
    }
    out.factors.push_back(std::move(marginal));
  }
  return out;
}

double relative_node_error(const BeliefSet& b, const BeliefSet& reference) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t v = 0; v < reference.nodes.size(); ++v) {
    num += detail::l1_distance(b.nodes.at(v), reference.nodes[v]);
    for (double x : reference.nodes[v]) den += std::abs(x);
  }
  return den > 0.0 ? num / den : num;
}

double max_belief_distance(const BeliefSet& a, const BeliefSet& b) {
  double worst = 0.0;
  for (std::size_t v = 0; v < a.nodes.size(); ++v)
    worst = std::max(worst, detail::l1_distance(a.nodes[v], b.nodes.at(v)));
  for (std::size_t f = 0; f < a.factors.size(); ++f)
    worst = std::max(worst, detail::l1_distance(a.factors[f].values(), b.factors.at(f).values()));
  return worst;
}

}  // namespace treemot
