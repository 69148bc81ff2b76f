#include "treemot/dense_oracle.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "log_math.hpp"
#include "odometer.hpp"

namespace treemot {

namespace {

std::vector<VarIndex> all_variables(const FactorTree& g) {
  std::vector<VarIndex> scope(g.num_variables());
  std::iota(scope.begin(), scope.end(), VarIndex{0});
  return scope;
}

std::vector<double> projection(const DenseTensor& b, VarIndex j) {
  const DenseTensor p = project(b, j);
  return {p.values().begin(), p.values().end()};
}

}  // namespace

void check_dense_cap(const FactorTree& g, std::size_t cap) {
  const auto cards = g.cardinalities();
  // Compare in floating point so that huge products do not overflow.
  double volume = 1.0;
  for (std::size_t d : cards) volume *= static_cast<double>(d);
  if (volume > static_cast<double>(cap)) {
    std::string dims;
    for (std::size_t k = 0; k < cards.size(); ++k)
      dims += (k ? "x" : "") + std::to_string(cards[k]);
    throw DenseCapError("dense joint needs prod(d_j) = " + dims + " = " +
                        std::to_string(static_cast<long double>(volume)) +
                        " entries, above the cap of " + std::to_string(cap));
  }
}

DenseTensor joint_kernel(const FactorTree& g, std::size_t cap) {
  check_dense_cap(g, cap);
  DenseTensor k(all_variables(g), g.cardinalities(), 1.0);
  for (VarIndex v = 0; v < g.num_variables(); ++v) scale_mode(k, v, g.variable(v).phi);
  auto values = k.values();
  for (const Factor& f : g.factors()) {
    detail::SubIndex sub(f.scope, f.table.strides());
    detail::Odometer it(k.shape());
    std::size_t flat = 0;
    do {
      values[flat++] *= f.table[sub.offset(it.coords())];
    } while (it.next());
  }
  return k;
}

Joint full_joint(const FactorTree& g, std::size_t cap) {
  DenseTensor k = joint_kernel(g, cap);
  const double z = k.sum();
  if (!(z > 0.0)) throw DegenerateError("joint has zero total mass");
  return {normalized(k), z};
}

std::vector<double> brute_marginal(const FactorTree& g, VarIndex j, std::size_t cap) {
  return projection(full_joint(g, cap).joint, j);
}

double duality_gap(const MotProblem& p, const std::vector<std::vector<double>>& u,
                   std::size_t cap) {
  DenseTensor b = joint_kernel(to_potentials(p), cap);
  for (VarIndex v = 0; v < p.tree.num_variables(); ++v) scale_mode(b, v, u.at(v));
  return free_energy(p, normalized(b)) - dual_objective(p, u);
}

VanillaResult solve_vanilla_is(const MotProblem& p, const VanillaOptions& options) {
  require_valid(p);
  const auto start = std::chrono::steady_clock::now();
  const FactorTree& g = p.tree;
  const std::size_t nv = g.num_variables();
  const DenseTensor kernel = joint_kernel(to_potentials(p), options.cap);

  VanillaResult result;
  result.stats.stop_rule =
      "max_j |P_j(B)/mass - mu_j|_1 <= " + std::to_string(options.solve.tol) +
      (options.gap_tol ? " and duality gap <= " + std::to_string(*options.gap_tol) : "");
  ScalingState& s = result.scaling;
  s.u.resize(nv);
  const double init = std::exp(-1.0 / static_cast<double>(nv));
  for (VarIndex v = 0; v < nv; ++v) s.u[v].assign(g.cardinality(v), init);

  auto current_plan = [&] {
    DenseTensor b = kernel;
    for (VarIndex v = 0; v < nv; ++v) scale_mode(b, v, s.u[v]);
    return b;
  };
  auto finish = [&](SolveStatus status) {
    result.plan = normalized(current_plan());
    result.stats.status = status;
    result.stats.iterations = s.iterations;
    if (!p.constraints.empty()) result.stats.duality_gap = duality_gap(p, s.u, options.cap);
    result.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  };

  if (p.constraints.empty()) {
    s.iterations = 1;
    return finish(SolveStatus::converged);
  }

  auto dual_of = [&](const DenseTensor& b) {
    double linear = 0.0;
    for (const auto& [j, mu] : p.constraints) {
      const auto lambda = multipliers_from_scaling(p, j, s.u[j]);
      for (std::size_t x = 0; x < mu.size(); ++x)
        if (mu[x] > 0.0) linear += lambda[x] * mu[x];
    }
    return -p.epsilon * b.sum() - linear;
  };

  DenseTensor b = current_plan();
  if (options.record_dual) result.dual_trace.push_back(dual_of(b));
  while (s.iterations < options.solve.max_iters) {
    // Rebuild from K and u once per sweep so rounding does not accumulate.
    b = current_plan();
    double delta = 0.0;
    for (const auto& [j, mu] : p.constraints) {
      const auto proj = projection(b, j);
      std::vector<double> factor(mu.size());
      for (std::size_t x = 0; x < mu.size(); ++x) {
        if (mu[x] == 0.0) {
          factor[x] = 0.0;
          continue;
        }
        if (!(proj[x] > 0.0))
          throw InfeasibleError("marginal of '" + g.variable(j).id + "' has no mass at state " +
                                std::to_string(x) + " where the constraint is positive");
        factor[x] = mu[x] / proj[x];
      }
      for (std::size_t x = 0; x < mu.size(); ++x) {
        const double next = s.u[j][x] * factor[x];
        delta = std::max(delta, std::abs(next - s.u[j][x]) / std::max(std::abs(next), 1e-300));
        s.u[j][x] = next;
      }
      scale_mode(b, j, factor);
      ++result.stats.message_updates;
    }
    ++s.iterations;
    if (options.record_dual) result.dual_trace.push_back(dual_of(b));

    const double mass = b.sum();
    double residual = 0.0;
    for (const auto& [j, mu] : p.constraints) {
      auto proj = projection(b, j);
      for (double& x : proj) x /= mass;
      s.residuals[j] = detail::l1_distance(proj, mu);
      residual = std::max(residual, s.residuals[j]);
    }
    result.stats.residual = residual;
    result.stats.delta = delta;
    if (options.solve.record_trace) result.stats.trace.push_back({s.iterations, residual, delta});

    if (options.solve.observer) {
      // Node beliefs only: factor marginals of the dense plan are costly.
      IterationReport report{s.iterations, residual, delta, [&] {
                               BeliefSet nodes;
                               for (VarIndex v = 0; v < nv; ++v) {
                                 auto proj = projection(b, v);
                                 for (double& x : proj) x /= mass;
                                 nodes.nodes.push_back(std::move(proj));
                               }
                               return nodes;
                             }};
      if (options.solve.observer(report)) return finish(SolveStatus::stopped_by_observer);
    }
    if (residual <= options.solve.tol) {
      if (!options.gap_tol || std::abs(duality_gap(p, s.u, options.cap)) <= *options.gap_tol)
        return finish(SolveStatus::converged);
    }
  }
  return finish(SolveStatus::max_iterations);
}

}  // namespace treemot
