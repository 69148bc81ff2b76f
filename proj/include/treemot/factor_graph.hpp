#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "treemot/tensor.hpp"

namespace treemot {

using FactorIndex = std::size_t;
using EdgeIndex = std::size_t;

struct Variable {
  std::string id;
  std::size_t cardinality = 0;
  /// Node potential; all-ones when not supplied.
  std::vector<double> phi;
  /// Evidence-style potentials may contain zeros.
  bool evidence = false;
};

struct Factor {
  std::string id;
  std::vector<VarIndex> scope;
  /// Potential (or cost, for MOT problems) over `scope`, axes in scope order.
  DenseTensor table;
};

/// One variable-factor incidence. `axis` is the position of `var` in the
/// factor's scope.
struct Edge {
  VarIndex var = 0;
  FactorIndex factor = 0;
  std::size_t axis = 0;
};

/// A node of the bipartite graph, used for paths and partitions.
struct NodeRef {
  enum class Kind { variable, factor };
  Kind kind = Kind::variable;
  std::size_t index = 0;

  static NodeRef variable(VarIndex v) { return {Kind::variable, v}; }
  static NodeRef factor(FactorIndex f) { return {Kind::factor, f}; }
  bool is_variable() const { return kind == Kind::variable; }

  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Result of validation: empty `message` means the tree is well formed.
struct Diagnostics {
  std::string message;
  explicit operator bool() const { return message.empty(); }
  bool ok() const { return message.empty(); }
};

/// What the factor tables hold, which decides the sign checks in validate().
enum class TableKind { potential, cost };

/// Bipartite factor graph over discrete variables. Variables and factors keep
/// their insertion order; that order defines the index used everywhere else.
class FactorTree {
 public:
  VarIndex add_variable(std::string id, std::size_t cardinality,
                        std::vector<double> phi = {}, bool evidence = false);
  /// Adds a factor over the named variables; `values` are row-major in scope order.
  FactorIndex add_factor(std::string id, const std::vector<std::string>& scope,
                         std::vector<double> values);
  FactorIndex add_factor(std::string id, std::vector<VarIndex> scope,
                         std::vector<double> values);

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_factors() const { return factors_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const Variable& variable(VarIndex v) const { return variables_.at(v); }
  const Factor& factor(FactorIndex f) const { return factors_.at(f); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeIndex e) const { return edges_.at(e); }

  std::size_t cardinality(VarIndex v) const { return variables_.at(v).cardinality; }
  std::vector<std::size_t> cardinalities() const;

  /// Edges incident to a variable (one per neighboring factor), in factor order.
  const std::vector<EdgeIndex>& variable_edges(VarIndex v) const { return var_edges_.at(v); }
  /// Edges incident to a factor, in scope order.
  const std::vector<EdgeIndex>& factor_edges(FactorIndex f) const { return factor_edges_.at(f); }

  std::optional<EdgeIndex> find_edge(VarIndex v, FactorIndex f) const;

  std::optional<VarIndex> find_variable(const std::string& id) const;
  std::optional<FactorIndex> find_factor(const std::string& id) const;
  VarIndex variable_index(const std::string& id) const;
  FactorIndex factor_index(const std::string& id) const;

  void set_table(FactorIndex f, DenseTensor table);
  void set_phi(VarIndex v, std::vector<double> phi);

 private:
  std::vector<Variable> variables_;
  std::vector<Factor> factors_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeIndex>> var_edges_;
  std::vector<std::vector<EdgeIndex>> factor_edges_;
};

/// Checks the factor-tree invariants and reports the first violation.
Diagnostics validate(const FactorTree& g, TableKind kind = TableKind::potential);

/// Throws GraphError carrying the diagnostic when validation fails.
void require_valid(const FactorTree& g, TableKind kind = TableKind::potential);

/// Unique simple path between two variables, endpoints included.
std::vector<NodeRef> path(const FactorTree& g, VarIndex from, VarIndex to);

struct EdgeSplit {
  std::set<NodeRef> near;  ///< side containing the variable of the cut edge
  std::set<NodeRef> far;   ///< side containing the factor of the cut edge
};

/// Removes the edge (var, factor) and returns both components.
EdgeSplit split_by_edge(const FactorTree& g, VarIndex var, FactorIndex factor);

std::size_t degree(const FactorTree& g, VarIndex v);
std::set<VarIndex> leaves(const FactorTree& g);

/// Variable-variable edges of the equivalent undirected graph: every factor
/// becomes a clique over its scope.
std::set<std::pair<VarIndex, VarIndex>> standard_graph_edges(const FactorTree& g);

/// Breadth-first traversal rooted at variable `root`: nodes in visit order and
/// the edge connecting each node to its parent (absent for the root).
struct RootedOrder {
  std::vector<NodeRef> order;
  std::vector<std::optional<EdgeIndex>> parent_edge;
};
RootedOrder rooted_order(const FactorTree& g, VarIndex root = 0);

}  // namespace treemot
