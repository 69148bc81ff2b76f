#include "treemot/norm_product.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "log_math.hpp"

namespace treemot {

using detail::kNegInf;

namespace {

double log_phi(const MotProblem& p, VarIndex v, std::size_t x) {
  return p.epsilon * detail::safe_log(p.tree.variable(v).phi[x]);
}

/// ln psi_alpha + sum_{i != j} ln n_{i->alpha}, over the factor table of e.
std::vector<double> log_psi_hat(const MotProblem& p, const NpMessageState& s, EdgeIndex e) {
  const FactorTree& g = p.tree;
  const FactorIndex f = g.edge(e).factor;
  const DenseTensor& cost = g.factor(f).table;
  std::vector<double> out(cost.size());
  for (std::size_t flat = 0; flat < out.size(); ++flat) out[flat] = -cost[flat];
  for (EdgeIndex other : g.factor_edges(f)) {
    if (other == e) continue;
    for (std::size_t flat = 0; flat < out.size(); ++flat) out[flat] += s.log_n_at(g, other, flat);
  }
  return out;
}

/// Grouped log-sum-exp of `terms * scale` by the coordinate along `axis`.
std::vector<double> grouped_lse(const DenseTensor& layout, const std::vector<double>& terms,
                                double scale, std::size_t axis) {
  const std::size_t d = layout.shape()[axis];
  std::vector<double> hi(d, kNegInf);
  for (std::size_t flat = 0; flat < terms.size(); ++flat) {
    const double t = terms[flat] * scale;
    double& h = hi[layout.coordinate(flat, axis)];
    if (t > h) h = t;
  }
  std::vector<double> acc(d, 0.0);
  for (std::size_t flat = 0; flat < terms.size(); ++flat) {
    const std::size_t x = layout.coordinate(flat, axis);
    if (hi[x] != kNegInf) acc[x] += std::exp(terms[flat] * scale - hi[x]);
  }
  std::vector<double> out(d);
  for (std::size_t x = 0; x < d; ++x) out[x] = hi[x] == kNegInf ? kNegInf : hi[x] + std::log(acc[x]);
  return out;
}

void check_edge_numbers(const NpExponents& x) {
  if (!(x.m_outer > 0.0) || !std::isfinite(x.m_inner))
    throw CountingError("chat_{j alpha} must be positive for the norm-product update");
}

/// Shared tail of both n branches: node part over x_j, plus the factor part
/// over x_alpha when the edge is stored in full. Entries that come out NaN
/// or +inf keep their previous value.
std::vector<double> assemble_n(const MotProblem& p, const NpMessageState& s, EdgeIndex e,
                               const std::vector<double>& node_part, double factor_power) {
  const FactorTree& g = p.tree;
  const auto& previous = s.log_n[e];
  std::vector<double> out;
  if (s.full[e]) {
    const DenseTensor& layout = g.factor(g.edge(e).factor).table;
    const std::vector<double> hat = log_psi_hat(p, s, e);
    const std::size_t axis = g.edge(e).axis;
    out.resize(layout.size());
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
      double v = node_part[layout.coordinate(flat, axis)];
      if (factor_power != 0.0) v += factor_power * hat[flat];
      out[flat] = v;
    }
  } else {
    out = node_part;
  }
  for (std::size_t k = 0; k < out.size(); ++k)
    if (std::isnan(out[k]) || out[k] == std::numeric_limits<double>::infinity()) out[k] = previous[k];
  const double z = detail::log_sum_exp(out);
  if (z == kNegInf) throw DegenerateError("norm-product message has zero mass");
  for (double& v : out) v -= z;
  return out;
}

double prob_distance(const std::vector<double>& log_a, const std::vector<double>& log_b) {
  double d = 0.0;
  for (std::size_t k = 0; k < log_a.size(); ++k) {
    const double a = log_a[k] == kNegInf ? 0.0 : std::exp(log_a[k]);
    const double b = log_b[k] == kNegInf ? 0.0 : std::exp(log_b[k]);
    d += std::abs(a - b);
  }
  return d;
}

DenseTensor factor_belief(const MotProblem& p, const CountingNumbers& c, const NpMessageState& s,
                          FactorIndex f) {
  const FactorTree& g = p.tree;
  const DenseTensor& cost = g.factor(f).table;
  std::vector<double> logs(cost.size());
  for (std::size_t flat = 0; flat < logs.size(); ++flat) {
    double v = -cost[flat];
    for (EdgeIndex e : g.factor_edges(f)) v += s.log_n_at(g, e, flat);
    logs[flat] = v / (p.epsilon * c.c_factor[f]);
  }
  return DenseTensor(cost.scope(), cost.shape(), detail::exp_normalized(logs));
}

}  // namespace

NpMessageState NpMessageState::initial(const FactorTree& g, const CountingNumbers& c) {
  NpMessageState s;
  for (EdgeIndex e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edge(e);
    const std::size_t d = g.cardinality(edge.var);
    s.log_m.emplace_back(d, -std::log(static_cast<double>(d)));
    const bool full = c.c_edge.at(e) != 0.0;
    s.full.push_back(full);
    s.log_n.emplace_back(full ? g.factor(edge.factor).table.size() : d, 0.0);
  }
  return s;
}

double NpMessageState::log_n_at(const FactorTree& g, EdgeIndex e, std::size_t flat) const {
  if (full[e]) return log_n[e][flat];
  const Edge& edge = g.edge(e);
  return log_n[e][g.factor(edge.factor).table.coordinate(flat, edge.axis)];
}

NpExponents np_exponents(const FactorTree& g, const CountingNumbers& c, double epsilon,
                         EdgeIndex e) {
  const Edge& edge = g.edge(e);
  const double chat_e = c.chat_edge.at(e);
  const double chat_j = c.chat_var.at(edge.var);
  const double c_a = c.c_factor.at(edge.factor);
  return {1.0 / (epsilon * chat_e), epsilon * chat_e, 1.0 / chat_j,      1.0 / chat_e,
          c_a,                      epsilon * c_a,    -c.c_edge[e] / chat_e, 1.0 / (epsilon * chat_j),
          1.0 / (epsilon * c_a)};
}

std::vector<double> np_update_m(const MotProblem& p, const CountingNumbers& c,
                                const NpMessageState& s, EdgeIndex e) {
  const FactorTree& g = p.tree;
  const NpExponents x = np_exponents(g, c, p.epsilon, e);
  check_edge_numbers(x);
  const DenseTensor& layout = g.factor(g.edge(e).factor).table;
  std::vector<double> out = grouped_lse(layout, log_psi_hat(p, s, e), x.m_inner, g.edge(e).axis);
  for (double& v : out) v *= x.m_outer;
  const double z = detail::log_sum_exp(out);
  if (z == kNegInf)
    throw DegenerateError("message from factor '" + g.factor(g.edge(e).factor).id + "' has zero mass");
  for (double& v : out) v -= z;
  return out;
}

std::vector<double> np_update_n_free(const MotProblem& p, const CountingNumbers& c,
                                     const NpMessageState& s, EdgeIndex e) {
  const FactorTree& g = p.tree;
  const VarIndex j = g.edge(e).var;
  const NpExponents x = np_exponents(g, c, p.epsilon, e);
  check_edge_numbers(x);
  if (!(c.chat_var[j] > 0.0)) throw CountingError("chat_j must be positive for the free update");
  std::vector<double> node(g.cardinality(j));
  for (std::size_t k = 0; k < node.size(); ++k) {
    double all = log_phi(p, j, k);
    for (EdgeIndex other : g.variable_edges(j)) all += s.log_m[other][k];
    node[k] = x.free_outer * (x.node_power * all - x.free_denominator * s.log_m[e][k]);
  }
  return assemble_n(p, s, e, node, x.factor_power);
}

std::vector<double> np_update_n_constrained(const MotProblem& p, const CountingNumbers& c,
                                            const NpMessageState& s, EdgeIndex e,
                                            const std::vector<double>& mu) {
  const FactorTree& g = p.tree;
  const VarIndex j = g.edge(e).var;
  if (mu.size() != g.cardinality(j)) throw ShapeError("constraint length does not match the variable");
  const NpExponents x = np_exponents(g, c, p.epsilon, e);
  check_edge_numbers(x);
  std::vector<double> node(mu.size());
  for (std::size_t k = 0; k < node.size(); ++k)
    node[k] = x.constrained_outer * (detail::safe_log(mu[k]) - x.m_inner * s.log_m[e][k]);
  return assemble_n(p, s, e, node, x.factor_power);
}

BeliefSet cnp_beliefs(const MotProblem& p, const CountingNumbers& c, const NpMessageState& s) {
  const FactorTree& g = p.tree;
  BeliefSet out;
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    if (p.is_constrained(v)) {
      out.nodes.push_back(p.constraints.at(v));
      continue;
    }
    std::vector<double> logs(g.cardinality(v));
    for (std::size_t k = 0; k < logs.size(); ++k) {
      double all = log_phi(p, v, k);
      for (EdgeIndex e : g.variable_edges(v)) all += s.log_m[e][k];
      logs[k] = all / (p.epsilon * c.chat_var[v]);
    }
    out.nodes.push_back(detail::exp_normalized(logs));
  }
  for (FactorIndex f = 0; f < g.num_factors(); ++f) out.factors.push_back(factor_belief(p, c, s, f));
  return out;
}

DenseTensor appendix_factor_belief(const MotProblem& p, const CountingNumbers& c,
                                   const NpMessageState& s, EdgeIndex e,
                                   const std::vector<double>& b_j) {
  const FactorTree& g = p.tree;
  const NpExponents x = np_exponents(g, c, p.epsilon, e);
  const DenseTensor& layout = g.factor(g.edge(e).factor).table;
  const std::size_t axis = g.edge(e).axis;
  const std::vector<double> hat = log_psi_hat(p, s, e);
  const std::vector<double> log_norm = grouped_lse(layout, hat, x.m_inner, axis);
  DenseTensor out(layout.scope(), layout.shape(), 0.0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    const std::size_t k = layout.coordinate(flat, axis);
    if (b_j[k] == 0.0 || log_norm[k] == kNegInf) continue;
    out[flat] = b_j[k] * std::exp(hat[flat] * x.m_inner - log_norm[k]);
  }
  return out;
}

CnpResult solve_cnp(const MotProblem& p, const CountingNumbers& c, const CnpOptions& options) {
  require_valid(p);
  const auto start = std::chrono::steady_clock::now();
  const FactorTree& g = p.tree;
  if (c.c_var.size() != g.num_variables() || c.c_factor.size() != g.num_factors() ||
      c.c_edge.size() != g.num_edges())
    throw CountingError("counting numbers do not match the tree");
  const double violation = identity_violation(g, c);
  if (violation > 1e-9)
    throw CountingError("counting numbers violate the tree identities by " + std::to_string(violation));
  if (!c.convex && !options.allow_nonconvex)
    throw CountingError("counting numbers are not convex; pass allow_nonconvex to run anyway");

  std::vector<VarIndex> order = options.order;
  if (order.empty()) {
    order.resize(g.num_variables());
    std::iota(order.begin(), order.end(), VarIndex{0});
  }
  {
    std::vector<VarIndex> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k)
      if (sorted.size() != g.num_variables() || sorted[k] != k)
        throw std::invalid_argument("sweep order must be a permutation of the variables");
  }

  CnpResult result;
  result.state = NpMessageState::initial(g, c);
  NpMessageState& s = result.state;
  SolveStats& stats = result.stats;
  stats.stop_rule = "max message change <= " + std::to_string(options.solve.tol) +
                    " and max_{j in Gamma} |P_j(b_alpha) - mu_j|_1 <= " +
                    std::to_string(options.solve.tol);

  auto residual_now = [&] {
    double worst = 0.0;
    for (const auto& [j, mu] : p.constraints) {
      const EdgeIndex e = g.variable_edges(j).front();
      const DenseTensor b = factor_belief(p, c, s, g.edge(e).factor);
      const DenseTensor marginal = project(b, j);
      worst = std::max(worst, detail::l1_distance(marginal.values(), mu));
    }
    return worst;
  };
  auto finish = [&](SolveStatus status) {
    stats.status = status;
    result.beliefs = cnp_beliefs(p, c, s);
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  };

  while (stats.iterations < options.solve.max_iters) {
    double delta = 0.0;
    for (VarIndex j : order) {
      for (EdgeIndex e : g.variable_edges(j)) {
        auto m = np_update_m(p, c, s, e);
        delta = std::max(delta, prob_distance(m, s.log_m[e]));
        s.log_m[e] = std::move(m);
        ++stats.message_updates;
      }
      const bool constrained = p.is_constrained(j);
      for (EdgeIndex e : g.variable_edges(j)) {
        auto n = constrained ? np_update_n_constrained(p, c, s, e, p.constraints.at(j))
                             : np_update_n_free(p, c, s, e);
        delta = std::max(delta, prob_distance(n, s.log_n[e]));
        s.log_n[e] = std::move(n);
        ++stats.message_updates;
      }
    }
    ++stats.iterations;
    const double residual = residual_now();
    stats.residual = residual;
    stats.delta = delta;
    if (options.solve.record_trace) stats.trace.push_back({stats.iterations, residual, delta});
    if (options.solve.observer) {
      IterationReport report{stats.iterations, residual, delta, [&] { return cnp_beliefs(p, c, s); }};
      if (options.solve.observer(report)) return finish(SolveStatus::stopped_by_observer);
    }
    if (delta <= options.solve.tol && residual <= options.solve.tol)
      return finish(SolveStatus::converged);
  }
  return finish(SolveStatus::max_iterations);
}

}  // namespace treemot
