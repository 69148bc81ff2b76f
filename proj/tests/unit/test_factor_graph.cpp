#include <algorithm>
#include <deque>
#include <map>
#include <random>

#include "doctest.h"
#include "support/random_tree.hpp"
#include "treemot/factor_graph.hpp"

using namespace treemot;

namespace {

FactorTree pair_tree() {
  FactorTree g;
  g.add_variable("x1", 2);
  g.add_variable("x2", 2);
  g.add_factor("a", std::vector<std::string>{"x1", "x2"}, std::vector<double>(4, 1.0));
  return g;
}

std::vector<double> ones(const FactorTree& g, const std::vector<std::string>& scope) {
  std::size_t n = 1;
  for (const auto& id : scope) n *= g.cardinality(g.variable_index(id));
  return std::vector<double>(n, 1.0);
}

FactorTree build(const std::vector<std::string>& vars,
                 const std::vector<std::pair<std::string, std::vector<std::string>>>& factors) {
  FactorTree g;
  for (const auto& v : vars) g.add_variable(v, 2);
  for (const auto& [id, scope] : factors) g.add_factor(id, scope, ones(g, scope));
  return g;
}

// Bipartite BFS returning the node sequence from `from` to `to`.
std::vector<NodeRef> bfs_path(const FactorTree& g, VarIndex from, VarIndex to) {
  std::map<NodeRef, NodeRef> parent;
  std::deque<NodeRef> q{NodeRef::variable(from)};
  parent[NodeRef::variable(from)] = NodeRef::variable(from);
  while (!q.empty()) {
    const NodeRef n = q.front();
    q.pop_front();
    std::vector<NodeRef> next;
    if (n.is_variable()) {
      for (EdgeIndex e : g.variable_edges(n.index)) next.push_back(NodeRef::factor(g.edge(e).factor));
    } else {
      for (EdgeIndex e : g.factor_edges(n.index)) next.push_back(NodeRef::variable(g.edge(e).var));
    }
    for (const NodeRef& m : next)
      if (!parent.count(m)) {
        parent[m] = n;
        q.push_back(m);
      }
  }
  std::vector<NodeRef> out{NodeRef::variable(to)};
  while (out.back() != NodeRef::variable(from)) out.push_back(parent.at(out.back()));
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("factor_graph") {

TEST_CASE("validate accepts trees and rejects cycles") {
  CHECK(validate(pair_tree()).ok());

  FactorTree cyc = pair_tree();
  cyc.add_factor("b", std::vector<std::string>{"x1", "x2"}, std::vector<double>(4, 1.0));
  const Diagnostics d = validate(cyc);
  CHECK_FALSE(d.ok());
  CHECK(d.message.find("cycl") != std::string::npos);

  FactorTree disc = pair_tree();
  disc.add_variable("x3", 2);
  disc.add_variable("x4", 2);
  disc.add_factor("c", std::vector<std::string>{"x3", "x4"}, std::vector<double>(4, 1.0));
  CHECK_FALSE(validate(disc).ok());

  FactorTree loose = pair_tree();
  loose.add_variable("x3", 2);
  CHECK_FALSE(validate(loose).ok());

  FactorTree neg = pair_tree();
  neg.set_table(0, DenseTensor({0, 1}, {2, 2}, std::vector<double>{1, -1, 1, 1}));
  CHECK_FALSE(validate(neg).ok());
  CHECK(validate(neg, TableKind::cost).ok());

  CHECK_THROWS_AS(require_valid(cyc), GraphError);
}

TEST_CASE("four-variable factor topology validates") {
  const FactorTree g = build({"x1", "x2", "x3", "x4", "x5", "x6"},
                             {{"a1", {"x1", "x2", "x4", "x5"}}, {"a2", {"x3", "x5"}}, {"a3", {"x4", "x6"}}});
  CHECK(validate(g).ok());
  // the 4-variable factor becomes a 4-clique in the standard graph
  CHECK(standard_graph_edges(g).size() == 6 + 1 + 1);
}

TEST_CASE("leaves and degree") {
  const FactorTree line = pair_tree();
  CHECK(leaves(line) == std::set<VarIndex>{0, 1});

  const FactorTree g = build({"1", "2", "3", "4", "5", "6"},
                             {{"a1", {"1", "4"}}, {"a2", {"2", "4"}}, {"a3", {"3", "5"}},
                              {"a4", {"4", "5", "6"}}});
  REQUIRE(validate(g).ok());
  std::set<std::string> ids;
  for (VarIndex v : leaves(g)) ids.insert(g.variable(v).id);
  CHECK(ids == std::set<std::string>{"1", "2", "3", "6"});

  FactorTree star;
  star.add_variable("hub", 2);
  for (int k = 0; k < 5; ++k) {
    const std::string id = "s" + std::to_string(k);
    star.add_variable(id, 2);
    star.add_factor("f" + std::to_string(k), std::vector<std::string>{"hub", id}, std::vector<double>(4, 1.0));
  }
  CHECK(degree(star, 0) == 5);
}

TEST_CASE("path") {
  const FactorTree g = pair_tree();
  CHECK(path(g, 0, 0) == std::vector<NodeRef>{NodeRef::variable(0)});
  CHECK(path(g, 0, 1) ==
        std::vector<NodeRef>{NodeRef::variable(0), NodeRef::factor(0), NodeRef::variable(1)});
  CHECK_THROWS(path(g, 0, 9));

  std::mt19937_64 rng(21);
  testing::RandomTreeSpec spec;
  spec.variables = 12;
  spec.max_card = 2;
  spec.max_arity = 3;
  for (int rep = 0; rep < 20; ++rep) {
    const MotProblem p = testing::random_problem(rng, spec);
    const FactorTree& t = p.tree;
    for (VarIndex a = 0; a < t.num_variables(); ++a)
      for (VarIndex b = 0; b < t.num_variables(); ++b) {
        const auto ab = path(t, a, b);
        CHECK(ab == bfs_path(t, a, b));
        auto ba = path(t, b, a);
        std::reverse(ba.begin(), ba.end());
        CHECK(ab == ba);
      }
  }
}

TEST_CASE("split_by_edge") {
  const FactorTree g = pair_tree();
  const EdgeSplit s = split_by_edge(g, 0, 0);
  CHECK(s.near == std::set<NodeRef>{NodeRef::variable(0)});
  CHECK(s.far == std::set<NodeRef>{NodeRef::factor(0), NodeRef::variable(1)});
  CHECK_THROWS(split_by_edge(build({"x1", "x2", "x3"}, {{"a", {"x1", "x2"}}, {"b", {"x2", "x3"}}}), 0, 1));

  // six variables, five pairwise factors; cutting (2, a2) leaves 7 of 11 nodes with variable 2
  const FactorTree f = build({"1", "2", "3", "4", "5", "6"},
                             {{"a1", {"1", "2"}}, {"a2", {"2", "5"}}, {"a3", {"1", "3"}},
                              {"a4", {"3", "4"}}, {"a5", {"5", "6"}}});
  REQUIRE(validate(f).ok());
  const EdgeSplit cut = split_by_edge(f, f.variable_index("2"), f.factor_index("a2"));
  CHECK(cut.near.size() == 7);
  CHECK(cut.far.size() == 4);

  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const MotProblem p = testing::random_problem(rng, {});
    const FactorTree& t = p.tree;
    const std::size_t total = t.num_variables() + t.num_factors();
    // rooted subtree sizes: cutting a parent edge isolates the child's subtree
    const RootedOrder ro = rooted_order(t, 0);
    std::map<NodeRef, std::size_t> sub;
    for (auto it = ro.order.rbegin(); it != ro.order.rend(); ++it) sub[*it] += 1;
    for (std::size_t k = ro.order.size(); k-- > 1;) {
      const Edge& e = t.edge(*ro.parent_edge[k]);
      const NodeRef child = ro.order[k];
      const NodeRef par = child.is_variable() ? NodeRef::factor(e.factor) : NodeRef::variable(e.var);
      sub[par] += sub[child];
    }
    for (std::size_t k = 1; k < ro.order.size(); ++k) {
      const Edge& e = t.edge(*ro.parent_edge[k]);
      const EdgeSplit es = split_by_edge(t, e.var, e.factor);
      CHECK(es.near.size() + es.far.size() == total);
      for (const NodeRef& n : es.near) CHECK(es.far.count(n) == 0);
      const std::size_t child_side = ro.order[k].is_variable() ? es.near.size() : es.far.size();
      CHECK(child_side == sub[ro.order[k]]);
    }
  }
}

TEST_CASE("degree sum equals edge count") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    const MotProblem p = testing::random_problem(rng, {});
    std::size_t s = 0;
    for (VarIndex v = 0; v < p.tree.num_variables(); ++v) s += degree(p.tree, v);
    CHECK(s == p.tree.num_edges());
    CHECK(s == p.tree.num_variables() + p.tree.num_factors() - 1);
  }
}

}
