#include "treemot/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

namespace treemot {

VarIndex FactorTree::add_variable(std::string id, std::size_t cardinality,
                                  std::vector<double> phi, bool evidence) {
  if (find_variable(id)) throw GraphError("duplicate variable id '" + id + "'");
  if (cardinality == 0) throw GraphError("variable '" + id + "' has zero cardinality");
  if (phi.empty()) phi.assign(cardinality, 1.0);
  if (phi.size() != cardinality)
    throw GraphError("node potential of '" + id + "' has length " +
                     std::to_string(phi.size()) + ", expected " +
                     std::to_string(cardinality));
  variables_.push_back({std::move(id), cardinality, std::move(phi), evidence});
  var_edges_.emplace_back();
  return variables_.size() - 1;
}

FactorIndex FactorTree::add_factor(std::string id, const std::vector<std::string>& scope,
                                   std::vector<double> values) {
  std::vector<VarIndex> indices;
  indices.reserve(scope.size());
  for (const std::string& name : scope) {
    auto v = find_variable(name);
    if (!v) throw GraphError("factor '" + id + "' references unknown variable '" + name + "'");
    indices.push_back(*v);
  }
  return add_factor(std::move(id), std::move(indices), std::move(values));
}

FactorIndex FactorTree::add_factor(std::string id, std::vector<VarIndex> scope,
                                   std::vector<double> values) {
  if (find_factor(id)) throw GraphError("duplicate factor id '" + id + "'");
  std::vector<std::size_t> shape;
  for (VarIndex v : scope) {
    if (v >= variables_.size())
      throw GraphError("factor '" + id + "' references variable index " + std::to_string(v));
    shape.push_back(variables_[v].cardinality);
  }
  DenseTensor table;
  try {
    table = DenseTensor(scope, shape, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw GraphError("factor '" + id + "': " + e.what());
  }
  const FactorIndex f = factors_.size();
  factors_.push_back({std::move(id), scope, std::move(table)});
  factor_edges_.emplace_back();
  for (std::size_t axis = 0; axis < scope.size(); ++axis) {
    const EdgeIndex e = edges_.size();
    edges_.push_back({scope[axis], f, axis});
    var_edges_[scope[axis]].push_back(e);
    factor_edges_[f].push_back(e);
  }
  return f;
}

std::vector<std::size_t> FactorTree::cardinalities() const {
  std::vector<std::size_t> out;
  out.reserve(variables_.size());
  for (const Variable& v : variables_) out.push_back(v.cardinality);
  return out;
}

std::optional<EdgeIndex> FactorTree::find_edge(VarIndex v, FactorIndex f) const {
  for (EdgeIndex e : var_edges_.at(v))
    if (edges_[e].factor == f) return e;
  return std::nullopt;
}

std::optional<VarIndex> FactorTree::find_variable(const std::string& id) const {
  for (VarIndex v = 0; v < variables_.size(); ++v)
    if (variables_[v].id == id) return v;
  return std::nullopt;
}

std::optional<FactorIndex> FactorTree::find_factor(const std::string& id) const {
  for (FactorIndex f = 0; f < factors_.size(); ++f)
    if (factors_[f].id == id) return f;
  return std::nullopt;
}

VarIndex FactorTree::variable_index(const std::string& id) const {
  auto v = find_variable(id);
  if (!v) throw GraphError("unknown variable '" + id + "'");
  return *v;
}

FactorIndex FactorTree::factor_index(const std::string& id) const {
  auto f = find_factor(id);
  if (!f) throw GraphError("unknown factor '" + id + "'");
  return *f;
}

void FactorTree::set_table(FactorIndex f, DenseTensor table) {
  Factor& factor = factors_.at(f);
  if (table.scope() != factor.scope || table.shape() != factor.table.shape())
    throw GraphError("replacement table for factor '" + factor.id + "' has a different layout");
  factor.table = std::move(table);
}

void FactorTree::set_phi(VarIndex v, std::vector<double> phi) {
  Variable& var = variables_.at(v);
  if (phi.size() != var.cardinality)
    throw GraphError("node potential of '" + var.id + "' has the wrong length");
  var.phi = std::move(phi);
}

Diagnostics validate(const FactorTree& g, TableKind kind) {
  const std::size_t nv = g.num_variables();
  const std::size_t nf = g.num_factors();
  if (nv == 0) return {"graph has no variables"};

  for (const Variable& v : g.variables()) {
    for (double p : v.phi) {
      if (!std::isfinite(p) || p < 0.0)
        return {"node potential of variable '" + v.id + "' has a negative or non-finite entry"};
      if (p == 0.0 && !v.evidence)
        return {"node potential of variable '" + v.id +
                "' has a zero entry but is not marked as evidence"};
    }
  }
  for (const Factor& f : g.factors()) {
    if (f.scope.empty()) return {"factor '" + f.id + "' has an empty scope"};
    for (std::size_t a = 0; a < f.scope.size(); ++a) {
      if (f.table.shape()[a] != g.cardinality(f.scope[a]))
        return {"factor '" + f.id + "' table shape does not match the cardinality of '" +
                g.variable(f.scope[a]).id + "'"};
    }
    if (kind == TableKind::potential) {
      for (double p : f.table.values())
        if (p < 0.0) return {"factor '" + f.id + "' has a negative potential entry"};
    }
  }
  for (VarIndex v = 0; v < nv; ++v)
    if (g.variable_edges(v).empty())
      return {"variable '" + g.variable(v).id + "' is not in any factor scope"};

  if (g.num_edges() != nv + nf - 1) {
    if (g.num_edges() > nv + nf - 1)
      return {"graph contains a cycle: |E| = " + std::to_string(g.num_edges()) +
              " but |V| + |F| - 1 = " + std::to_string(nv + nf - 1)};
    return {"graph is disconnected: |E| = " + std::to_string(g.num_edges()) +
            " but |V| + |F| - 1 = " + std::to_string(nv + nf - 1)};
  }
  // With |E| = |V| + |F| - 1, connectedness is equivalent to acyclicity.
  const RootedOrder order = rooted_order(g, 0);
  if (order.order.size() != nv + nf) {
    std::vector<bool> seen_var(nv, false), seen_factor(nf, false);
    for (const NodeRef& n : order.order)
      (n.is_variable() ? seen_var : seen_factor)[n.index] = true;
    for (VarIndex v = 0; v < nv; ++v)
      if (!seen_var[v])
        return {"graph contains a cycle and is disconnected; variable '" +
                g.variable(v).id + "' is unreachable"};
    for (FactorIndex f = 0; f < nf; ++f)
      if (!seen_factor[f])
        return {"graph contains a cycle and is disconnected; factor '" +
                g.factor(f).id + "' is unreachable"};
  }
  return {};
}

void require_valid(const FactorTree& g, TableKind kind) {
  Diagnostics d = validate(g, kind);
  if (!d) throw GraphError(d.message);
}

RootedOrder rooted_order(const FactorTree& g, VarIndex root) {
  RootedOrder out;
  std::vector<bool> seen_var(g.num_variables(), false);
  std::vector<bool> seen_factor(g.num_factors(), false);
  std::deque<std::pair<NodeRef, std::optional<EdgeIndex>>> queue;
  queue.push_back({NodeRef::variable(root), std::nullopt});
  seen_var[root] = true;
  while (!queue.empty()) {
    auto [node, via] = queue.front();
    queue.pop_front();
    out.order.push_back(node);
    out.parent_edge.push_back(via);
    if (node.is_variable()) {
      for (EdgeIndex e : g.variable_edges(node.index)) {
        const FactorIndex f = g.edge(e).factor;
        if (seen_factor[f]) continue;
        seen_factor[f] = true;
        queue.push_back({NodeRef::factor(f), e});
      }
    } else {
      for (EdgeIndex e : g.factor_edges(node.index)) {
        const VarIndex v = g.edge(e).var;
        if (seen_var[v]) continue;
        seen_var[v] = true;
        queue.push_back({NodeRef::variable(v), e});
      }
    }
  }
  return out;
}

std::vector<NodeRef> path(const FactorTree& g, VarIndex from, VarIndex to) {
  if (from >= g.num_variables() || to >= g.num_variables())
    throw GraphError("path endpoint out of range");
  if (from == to) return {NodeRef::variable(from)};
  const RootedOrder order = rooted_order(g, to);
  std::map<NodeRef, std::optional<EdgeIndex>> parent;
  for (std::size_t k = 0; k < order.order.size(); ++k)
    parent[order.order[k]] = order.parent_edge[k];
  if (!parent.count(NodeRef::variable(from)))
    throw GraphError("no path between '" + g.variable(from).id + "' and '" +
                     g.variable(to).id + "'");
  // Walking parents from `from` reaches the BFS root `to`.
  std::vector<NodeRef> out{NodeRef::variable(from)};
  NodeRef cur = out.back();
  while (!(cur == NodeRef::variable(to))) {
    const Edge& e = g.edge(*parent.at(cur));
    cur = cur.is_variable() ? NodeRef::factor(e.factor) : NodeRef::variable(e.var);
    out.push_back(cur);
  }
  return out;
}

EdgeSplit split_by_edge(const FactorTree& g, VarIndex var, FactorIndex factor) {
  if (var >= g.num_variables() || factor >= g.num_factors() || !g.find_edge(var, factor))
    throw GraphError("split_by_edge: no such edge");
  const EdgeIndex cut = *g.find_edge(var, factor);
  auto flood = [&](NodeRef start) {
    std::set<NodeRef> seen{start};
    std::vector<NodeRef> stack{start};
    while (!stack.empty()) {
      NodeRef n = stack.back();
      stack.pop_back();
      const auto& incident = n.is_variable() ? g.variable_edges(n.index) : g.factor_edges(n.index);
      for (EdgeIndex e : incident) {
        if (e == cut) continue;
        NodeRef next = n.is_variable() ? NodeRef::factor(g.edge(e).factor)
                                       : NodeRef::variable(g.edge(e).var);
        if (seen.insert(next).second) stack.push_back(next);
      }
    }
    return seen;
  };
  return {flood(NodeRef::variable(var)), flood(NodeRef::factor(factor))};
}

std::size_t degree(const FactorTree& g, VarIndex v) {
  if (v >= g.num_variables()) throw GraphError("unknown variable index " + std::to_string(v));
  return g.variable_edges(v).size();
}

std::set<VarIndex> leaves(const FactorTree& g) {
  std::set<VarIndex> out;
  for (VarIndex v = 0; v < g.num_variables(); ++v)
    if (g.variable_edges(v).size() == 1) out.insert(v);
  return out;
}

std::set<std::pair<VarIndex, VarIndex>> standard_graph_edges(const FactorTree& g) {
  std::set<std::pair<VarIndex, VarIndex>> out;
  for (const Factor& f : g.factors())
    for (std::size_t a = 0; a < f.scope.size(); ++a)
      for (std::size_t b = a + 1; b < f.scope.size(); ++b)
        out.insert(std::minmax(f.scope[a], f.scope[b]));
  return out;
}

}  // namespace treemot
