#include "treemot/counting.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace treemot {

double CountingNumbers::bar_var(const FactorTree& g, VarIndex j) const {
  double out = c_var.at(j);
  for (EdgeIndex e : g.variable_edges(j)) out -= c_edge[e];
  return out;
}

double CountingNumbers::bar_factor(const FactorTree& g, FactorIndex alpha) const {
  double out = c_factor.at(alpha);
  for (EdgeIndex e : g.factor_edges(alpha)) out += c_edge[e];
  return out;
}

void finalize_counting(const FactorTree& g, CountingNumbers& c) {
  if (c.c_var.size() != g.num_variables() || c.c_factor.size() != g.num_factors() ||
      c.c_edge.size() != g.num_edges())
    throw CountingError("counting numbers do not match the tree");
  c.chat_var.assign(g.num_variables(), 0.0);
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    c.chat_var[v] = c.c_var[v];
    for (EdgeIndex e : g.variable_edges(v)) c.chat_var[v] += c.c_factor[g.edge(e).factor];
  }
  c.chat_edge.assign(g.num_edges(), 0.0);
  for (EdgeIndex e = 0; e < g.num_edges(); ++e)
    c.chat_edge[e] = c.c_factor[g.edge(e).factor] + c.c_edge[e];
  c.convex = std::all_of(c.c_var.begin(), c.c_var.end(), [](double x) { return x >= 0.0; }) &&
             std::all_of(c.c_edge.begin(), c.c_edge.end(), [](double x) { return x >= 0.0; }) &&
             std::all_of(c.c_factor.begin(), c.c_factor.end(), [](double x) { return x > 0.0; });
}

CountingNumbers construct_counting(const FactorTree& g, const std::vector<double>& c_var,
                                   const std::vector<double>& c_factor) {
  require_valid(g, TableKind::cost);
  if (c_var.size() != g.num_variables() || c_factor.size() != g.num_factors())
    throw CountingError("need one weight per variable and per factor");
  for (double c : c_var)
    if (!(c >= 0.0) || !std::isfinite(c)) throw CountingError("variable weights must be >= 0");
  for (double c : c_factor)
    if (!(c > 0.0) || !std::isfinite(c)) throw CountingError("factor weights must be > 0");
  const double total = std::accumulate(c_var.begin(), c_var.end(), 0.0) +
                       std::accumulate(c_factor.begin(), c_factor.end(), 0.0);
  if (std::abs(total - 1.0) > kCountingTolerance)
    throw CountingError("weights must sum to 1, got " + std::to_string(total));

  // Subtree weights with respect to a root: each edge separates a child
  // subtree from the rest, so one side is a subtree sum and the other its
  // complement.
  const RootedOrder order = rooted_order(g, 0);
  std::vector<double> subtree(order.order.size(), 0.0);
  for (std::size_t k = 0; k < order.order.size(); ++k) {
    const NodeRef n = order.order[k];
    subtree[k] = n.is_variable() ? c_var[n.index] : c_factor[n.index];
  }
  std::vector<std::size_t> parent_pos(order.order.size(), 0);
  {
    std::vector<std::size_t> var_pos(g.num_variables()), factor_pos(g.num_factors());
    for (std::size_t k = 0; k < order.order.size(); ++k)
      (order.order[k].is_variable() ? var_pos : factor_pos)[order.order[k].index] = k;
    for (std::size_t k = 1; k < order.order.size(); ++k) {
      const Edge& e = g.edge(*order.parent_edge[k]);
      parent_pos[k] = order.order[k].is_variable() ? factor_pos[e.factor] : var_pos[e.var];
    }
  }
  for (std::size_t k = order.order.size(); k-- > 1;) subtree[parent_pos[k]] += subtree[k];

  CountingNumbers c;
  c.c_var = c_var;
  c.c_factor = c_factor;
  c.c_edge.assign(g.num_edges(), 0.0);
  for (std::size_t k = 1; k < order.order.size(); ++k) {
    const EdgeIndex e = *order.parent_edge[k];
    // The child side is the subtree at k; the variable side is either it or
    // its complement.
    c.c_edge[e] = order.order[k].is_variable() ? subtree[k] : total - subtree[k];
  }
  finalize_counting(g, c);
  return c;
}

CountingNumbers bethe_numbers(const FactorTree& g) {
  CountingNumbers c;
  c.c_factor.assign(g.num_factors(), 1.0);
  c.c_var.resize(g.num_variables());
  for (VarIndex v = 0; v < g.num_variables(); ++v)
    c.c_var[v] = 1.0 - static_cast<double>(degree(g, v));
  c.c_edge.assign(g.num_edges(), 0.0);
  finalize_counting(g, c);
  return c;
}

CountingNumbers default_uniform(const FactorTree& g) {
  const double w = 1.0 / static_cast<double>(g.num_variables() + g.num_factors());
  return construct_counting(g, std::vector<double>(g.num_variables(), w),
                            std::vector<double>(g.num_factors(), w));
}

CountingNumbers experiment_preset(const FactorTree& g) {
  const double w = 1.0 / static_cast<double>(g.num_factors());
  return construct_counting(g, std::vector<double>(g.num_variables(), 0.0),
                            std::vector<double>(g.num_factors(), w));
}

double identity_violation(const FactorTree& g, const CountingNumbers& c) {
  double worst = 0.0;
  for (VarIndex v = 0; v < g.num_variables(); ++v)
    worst = std::max(worst,
                     std::abs(c.bar_var(g, v) - (1.0 - static_cast<double>(degree(g, v)))));
  for (FactorIndex f = 0; f < g.num_factors(); ++f)
    worst = std::max(worst, std::abs(c.bar_factor(g, f) - 1.0));
  return worst;
}

CountingNumbers load_counting(const FactorTree& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CountingError("cannot open counting-number file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CountingError(path.string() + ": " + e.what());
  }
  std::vector<double> c_var(g.num_variables(), 0.0), c_factor(g.num_factors(), 0.0);
  try {
    for (const auto& [id, value] : doc.at("c_var").items())
      c_var[g.variable_index(id)] = value.get<double>();
    for (const auto& [id, value] : doc.at("c_factor").items())
      c_factor[g.factor_index(id)] = value.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CountingError(path.string() + ": " + e.what());
  } catch (const GraphError& e) {
    throw CountingError(path.string() + ": " + e.what());
  }
  return construct_counting(g, c_var, c_factor);
}

CountingNumbers counting_from_selector(const FactorTree& g, const std::string& selector) {
  if (selector == "uniform") return default_uniform(g);
  if (selector == "experiment") return experiment_preset(g);
  if (selector == "bethe") return bethe_numbers(g);
  if (selector.rfind("file:", 0) == 0) return load_counting(g, selector.substr(5));
  throw CountingError("unknown counting selector '" + selector +
                      "' (expected uniform, experiment, bethe or file:<path>)");
}

}  // namespace treemot
