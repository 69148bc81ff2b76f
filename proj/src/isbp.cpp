#include "treemot/isbp.hpp"

#include <chrono>
#include <cmath>

#include "log_math.hpp"

namespace treemot {

namespace {

void normalize_or_throw(std::vector<double>& v, const char* what) {
  if (!detail::normalize_in_place(v)) throw DegenerateError(std::string(what) + " has zero mass");
}

struct Step {
  bool is_m;
  EdgeIndex edge;
};

class Sweeper {
 public:
  Sweeper(const MotProblem& p, const FactorTree& kernels, MessageState& s)
      : p_(p), k_(kernels), s_(s) {}

  std::size_t updates = 0;

  void set_m(EdgeIndex e) {
    s_.m[e] = update_m(k_, s_, e);
    ++updates;
  }
  void set_n_free(EdgeIndex e) {
    s_.n[e] = update_n_free(p_.tree, s_, e);
    ++updates;
  }
  void set_n_constrained(VarIndex j) {
    const EdgeIndex e = p_.tree.variable_edges(j).front();
    s_.n[e] = update_n_constrained(p_.tree, s_, j, p_.tree.edge(e).factor, p_.constraints.at(j));
    ++updates;
  }

  /// Leaves-to-root then root-to-leaves; with `hold` the constrained leaves
  /// keep their current n.
  void full_sweep(bool hold) {
    const FactorTree& g = p_.tree;
    const RootedOrder order = rooted_order(g, 0);
    auto variable_update = [&](VarIndex v, EdgeIndex e) {
      if (hold && p_.is_constrained(v)) return;
      set_n_free(e);
    };
    for (std::size_t k = order.order.size(); k-- > 1;) {
      const NodeRef node = order.order[k];
      const EdgeIndex e = *order.parent_edge[k];
      if (node.is_variable())
        variable_update(node.index, e);
      else
        set_m(e);
    }
    for (std::size_t k = 0; k < order.order.size(); ++k) {
      const NodeRef node = order.order[k];
      const auto& incident =
          node.is_variable() ? g.variable_edges(node.index) : g.factor_edges(node.index);
      for (EdgeIndex e : incident) {
        if (order.parent_edge[k] && e == *order.parent_edge[k]) continue;
        if (node.is_variable())
          variable_update(node.index, e);
        else
          set_m(e);
      }
    }
  }

  void run(const std::vector<Step>& steps) {
    for (const Step& st : steps) st.is_m ? set_m(st.edge) : set_n_free(st.edge);
  }

 private:
  const MotProblem& p_;
  const FactorTree& k_;
  MessageState& s_;
};

/// Messages to refresh after the constrained update at `from`, in path order.
std::vector<Step> path_schedule(const FactorTree& g, VarIndex from, VarIndex to) {
  std::vector<Step> steps;
  const auto nodes = path(g, from, to);
  for (std::size_t k = 1; k + 1 < nodes.size(); k += 2) {
    const FactorIndex f = nodes[k].index;
    const VarIndex next = nodes[k + 1].index;
    steps.push_back({true, *g.find_edge(next, f)});
    if (k + 2 < nodes.size()) steps.push_back({false, *g.find_edge(next, nodes[k + 2].index)});
  }
  return steps;
}

std::vector<double> local_marginal(const MessageState& s, EdgeIndex e) {
  std::vector<double> b(s.m[e].size());
  for (std::size_t x = 0; x < b.size(); ++x) b[x] = s.m[e][x] * s.n[e][x];
  detail::normalize_in_place(b);
  return b;
}

}  // namespace

MessageState MessageState::uniform(const FactorTree& g) {
  MessageState s;
  for (const Edge& e : g.edges()) {
    const std::size_t d = g.cardinality(e.var);
    s.m.emplace_back(d, 1.0 / static_cast<double>(d));
    s.n.emplace_back(d, 1.0 / static_cast<double>(d));
  }
  return s;
}

std::vector<double> update_m(const FactorTree& kernels, const MessageState& s, EdgeIndex e) {
  const Edge& target = kernels.edge(e);
  const DenseTensor& table = kernels.factor(target.factor).table;
  const auto& edges = kernels.factor_edges(target.factor);
  std::vector<double> out(kernels.cardinality(target.var), 0.0);
  for (std::size_t flat = 0; flat < table.size(); ++flat) {
    double w = table[flat];
    for (EdgeIndex other : edges) {
      if (other == e || w == 0.0) continue;
      w *= s.n[other][table.coordinate(flat, kernels.edge(other).axis)];
    }
    out[table.coordinate(flat, target.axis)] += w;
  }
  normalize_or_throw(out, ("message from factor '" + kernels.factor(target.factor).id + "'").c_str());
  return out;
}

std::vector<double> update_m(const FactorTree& kernels, const MessageState& s, FactorIndex alpha,
                             VarIndex j) {
  auto e = kernels.find_edge(j, alpha);
  if (!e) throw GraphError("no edge between the factor and the variable");
  return update_m(kernels, s, *e);
}

std::vector<double> update_n_free(const FactorTree& g, const MessageState& s, EdgeIndex e) {
  const VarIndex j = g.edge(e).var;
  std::vector<double> out = g.variable(j).phi;
  for (EdgeIndex other : g.variable_edges(j)) {
    if (other == e) continue;
    for (std::size_t x = 0; x < out.size(); ++x) out[x] *= s.m[other][x];
  }
  normalize_or_throw(out, ("message from variable '" + g.variable(j).id + "'").c_str());
  return out;
}

std::vector<double> update_n_free(const FactorTree& g, const MessageState& s, VarIndex j,
                                  FactorIndex alpha) {
  auto e = g.find_edge(j, alpha);
  if (!e) throw GraphError("no edge between the variable and the factor");
  return update_n_free(g, s, *e);
}

std::vector<double> update_n_constrained(const FactorTree& g, const MessageState& s, VarIndex j,
                                         FactorIndex alpha, const std::vector<double>& mu) {
  auto e = g.find_edge(j, alpha);
  if (!e) throw GraphError("no edge between the variable and the factor");
  const auto& m = s.m[*e];
  if (mu.size() != m.size()) throw ShapeError("constraint length does not match the variable");
  std::vector<double> out(mu.size(), 0.0);
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu[x] == 0.0) continue;
    if (!(m[x] > 0.0))
      throw InfeasibleError("variable '" + g.variable(j).id + "' receives no mass at state " +
                            std::to_string(x) + " where its marginal is positive");
    out[x] = mu[x] / m[x];
  }
  normalize_or_throw(out, "constrained message");
  return out;
}

BeliefSet isbp_beliefs(const MotProblem& p, const FactorTree& kernels, const MessageState& s) {
  const FactorTree& g = p.tree;
  BeliefSet out;
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    if (p.is_constrained(v)) {
      out.nodes.push_back(p.constraints.at(v));
      continue;
    }
    std::vector<double> b = g.variable(v).phi;
    for (EdgeIndex e : g.variable_edges(v))
      for (std::size_t x = 0; x < b.size(); ++x) b[x] *= s.m[e][x];
    normalize_or_throw(b, "node belief");
    out.nodes.push_back(std::move(b));
  }
  for (FactorIndex f = 0; f < g.num_factors(); ++f) {
    DenseTensor b = kernels.factor(f).table;
    for (EdgeIndex e : g.factor_edges(f)) scale_mode(b, g.edge(e).var, s.n[e]);
    out.factors.push_back(normalized(b));
  }
  return out;
}

double residual_theorem1(const MessageState& s, const MotProblem& p) {
  const FactorTree kernels = to_potentials(p);
  const FactorTree& g = p.tree;
  double worst = 0.0;
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edge(e);
    worst = std::max(worst, detail::l1_distance(update_m(kernels, s, e), s.m[e]));
    const auto n = p.is_constrained(edge.var)
                       ? update_n_constrained(g, s, edge.var, edge.factor, p.constraints.at(edge.var))
                       : update_n_free(g, s, e);
    worst = std::max(worst, detail::l1_distance(n, s.n[e]));
  }
  return worst;
}

std::vector<std::vector<double>> scaling_from_messages(const MotProblem& p,
                                                       const MessageState& s) {
  const FactorTree& g = p.tree;
  const double init = std::exp(-1.0 / static_cast<double>(g.num_variables()));
  std::vector<std::vector<double>> u(g.num_variables());
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    u[v].assign(g.cardinality(v), init);
    if (!p.is_constrained(v)) continue;
    const auto& n = s.n[g.variable_edges(v).front()];
    const auto& phi = g.variable(v).phi;
    for (std::size_t x = 0; x < n.size(); ++x) u[v][x] = phi[x] > 0.0 ? n[x] / phi[x] : 0.0;
  }
  return u;
}

IsbpResult solve_isbp(const MotProblem& p, const SolveOptions& options) {
  require_valid(p);
  const auto start = std::chrono::steady_clock::now();
  const FactorTree& g = p.tree;
  const FactorTree kernels = to_potentials(p);

  IsbpResult result;
  result.state = MessageState::uniform(g);
  MessageState& s = result.state;
  SolveStats& stats = result.stats;
  stats.stop_rule = "max_{j in Gamma} |b_j - mu_j|_1 <= " + std::to_string(options.tol) +
                    " and max constrained-message change <= " + std::to_string(options.tol);
  Sweeper sweeper(p, kernels, s);
  sweeper.full_sweep(false);

  std::vector<VarIndex> gamma;
  for (const auto& entry : p.constraints) gamma.push_back(entry.first);
  std::vector<std::vector<Step>> schedules;
  for (std::size_t k = 0; k < gamma.size(); ++k)
    schedules.push_back(path_schedule(g, gamma[k], gamma[(k + 1) % gamma.size()]));

  auto finish = [&](SolveStatus status) {
    sweeper.full_sweep(true);
    stats.message_updates = sweeper.updates;
    stats.status = status;
    result.beliefs = isbp_beliefs(p, kernels, s);
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  };
  if (gamma.empty()) {
    stats.iterations = 1;
    return finish(SolveStatus::converged);
  }

  while (stats.iterations < options.max_iters) {
    double residual = 0.0;
    double delta = 0.0;
    for (std::size_t k = 0; k < gamma.size(); ++k) {
      s.cursor = k;
      const VarIndex j = gamma[k];
      const EdgeIndex e = g.variable_edges(j).front();
      residual = std::max(residual, detail::l1_distance(local_marginal(s, e), p.constraints.at(j)));
      const auto before = s.n[e];
      sweeper.set_n_constrained(j);
      delta = std::max(delta, detail::l1_distance(before, s.n[e]));
      sweeper.run(schedules[k]);
    }
    ++stats.iterations;
    stats.residual = residual;
    stats.delta = delta;
    if (options.record_trace) stats.trace.push_back({stats.iterations, residual, delta});
    if (options.observer) {
      IterationReport report{stats.iterations, residual, delta, [&] {
                               MessageState copy = s;
                               Sweeper(p, kernels, copy).full_sweep(true);
                               return isbp_beliefs(p, kernels, copy);
                             }};
      if (options.observer(report)) return finish(SolveStatus::stopped_by_observer);
    }
    if (residual <= options.tol && delta <= options.tol) return finish(SolveStatus::converged);
  }
  return finish(SolveStatus::max_iterations);
}

}  // namespace treemot
