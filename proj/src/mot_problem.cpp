#include "treemot/mot_problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "log_math.hpp"
#include "odometer.hpp"

namespace treemot {

using detail::kNegInf;

namespace {

std::vector<VarIndex> all_variables(const FactorTree& g) {
  std::vector<VarIndex> scope(g.num_variables());
  std::iota(scope.begin(), scope.end(), VarIndex{0});
  return scope;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Diagnostics validate(const MotProblem& p) {
  Diagnostics d = validate(p.tree, TableKind::cost);
  if (!d) return d;
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
    return {"epsilon must be a positive finite number, got " + format_double(p.epsilon)};
  for (const auto& [v, mu] : p.constraints) {
    if (v >= p.tree.num_variables()) return {"constraint on unknown variable index " + std::to_string(v)};
    const std::string& id = p.tree.variable(v).id;
    if (degree(p.tree, v) != 1)
      return {"non-leaf constraint: variable '" + id + "' has degree " +
              std::to_string(degree(p.tree, v)) + "; only leaves may be constrained"};
    if (mu.size() != p.tree.cardinality(v))
      return {"constraint on '" + id + "' has length " + std::to_string(mu.size()) +
              ", expected " + std::to_string(p.tree.cardinality(v))};
    double total = 0.0;
    for (double x : mu) {
      if (!std::isfinite(x) || x < 0.0)
        return {"constraint on '" + id + "' has a negative or non-finite entry"};
      total += x;
    }
    if (std::abs(total - 1.0) > kMarginalSumTolerance)
      return {"constraint-normalization error: marginal of '" + id + "' sums to " +
              format_double(total)};
  }
  return {};
}

void require_valid(const MotProblem& p) {
  Diagnostics d = validate(p);
  if (!d) throw ProblemError(d.message);
}

FactorTree to_potentials(const MotProblem& p) {
  FactorTree out;
  for (const Variable& v : p.tree.variables())
    out.add_variable(v.id, v.cardinality, v.phi, v.evidence);
  for (const Factor& f : p.tree.factors()) {
    std::vector<double> kernel(f.table.size());
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      const double scaled = f.table[k] / p.epsilon;
      if (std::abs(scaled) > kMaxScaledCost)
        throw ProblemError("factor '" + f.id + "': cost/epsilon = " + format_double(scaled) +
                           " is outside [-700, 700]; shift the costs by a constant or "
                           "increase epsilon");
      kernel[k] = std::exp(-scaled);
    }
    out.add_factor(f.id, f.scope, std::move(kernel));
  }
  return out;
}

DenseTensor total_cost(const MotProblem& p) {
  const FactorTree& g = p.tree;
  DenseTensor cost(all_variables(g), g.cardinalities(), 0.0);
  auto values = cost.values();
  for (const Factor& f : g.factors()) {
    detail::SubIndex sub(f.scope, f.table.strides());
    detail::Odometer it(cost.shape());
    std::size_t flat = 0;
    do {
      values[flat++] += f.table[sub.offset(it.coords())];
    } while (it.next());
  }
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    const auto& phi = g.variable(v).phi;
    std::vector<double> node_cost(phi.size());
    for (std::size_t x = 0; x < phi.size(); ++x)
      node_cost[x] = phi[x] > 0.0 ? -p.epsilon * std::log(phi[x])
                                  : std::numeric_limits<double>::infinity();
    const std::size_t stride = cost.strides()[v];
    const std::size_t d = phi.size();
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += node_cost[(k / stride) % d];
  }
  return cost;
}

double free_energy(const MotProblem& p, const DenseTensor& joint) {
  if (joint.scope() != all_variables(p.tree) || joint.shape() != p.tree.cardinalities())
    throw ShapeError("joint tensor must span every variable in index order");
  const DenseTensor cost = total_cost(p);
  double energy = 0.0;
  double neg_entropy = 0.0;
  for (std::size_t k = 0; k < joint.size(); ++k) {
    if (joint[k] == 0.0) continue;
    energy += cost[k] * joint[k];
    neg_entropy += detail::xlogx(joint[k]);
  }
  return energy + p.epsilon * neg_entropy;
}

double compatibility_violation(const FactorTree& g, const BeliefSet& beliefs) {
  if (beliefs.nodes.size() != g.num_variables() || beliefs.factors.size() != g.num_factors())
    throw ProblemError("belief set does not match the tree");
  double worst = 0.0;
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    const auto& b = beliefs.nodes[v];
    if (b.size() != g.cardinality(v)) throw ProblemError("node belief has the wrong length");
    worst = std::max(worst, std::abs(std::accumulate(b.begin(), b.end(), 0.0) - 1.0));
  }
  for (FactorIndex f = 0; f < g.num_factors(); ++f) {
    const DenseTensor& b = beliefs.factors[f];
    if (b.scope() != g.factor(f).scope || b.shape() != g.factor(f).table.shape())
      throw ProblemError("factor belief has the wrong layout");
    worst = std::max(worst, std::abs(b.sum() - 1.0));
    for (VarIndex v : g.factor(f).scope) {
      const DenseTensor marginal = project(b, v);
      worst = std::max(worst, detail::l1_distance(marginal.values(), beliefs.nodes[v]));
    }
  }
  return worst;
}

double bethe_free_energy(const MotProblem& p, const BeliefSet& beliefs, double tolerance) {
  const FactorTree& g = p.tree;
  const double violation = compatibility_violation(g, beliefs);
  if (violation > tolerance)
    throw ProblemError("incompatible beliefs: violation " + format_double(violation) +
                       " exceeds tolerance " + format_double(tolerance));
  double energy = 0.0;
  double factor_neg_entropy = 0.0;
  double node_neg_entropy = 0.0;
  for (FactorIndex f = 0; f < g.num_factors(); ++f) {
    const DenseTensor& b = beliefs.factors[f];
    const DenseTensor& cost = g.factor(f).table;
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (b[k] == 0.0) continue;
      energy += b[k] * cost[k];
      factor_neg_entropy += detail::xlogx(b[k]);
    }
  }
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    const auto& b = beliefs.nodes[v];
    const auto& phi = g.variable(v).phi;
    const double n_j = static_cast<double>(degree(g, v));
    double h = 0.0;
    for (std::size_t x = 0; x < b.size(); ++x) {
      energy -= p.epsilon * detail::xlogy(b[x], phi[x]);
      h += detail::xlogx(b[x]);
    }
    node_neg_entropy += (n_j - 1.0) * h;
  }
  return energy + p.epsilon * factor_neg_entropy - p.epsilon * node_neg_entropy;
}

DenseTensor joint_from_beliefs(const FactorTree& g, const BeliefSet& beliefs,
                               std::size_t max_entries) {
  const auto cards = g.cardinalities();
  if (checked_volume(cards) > max_entries)
    throw ShapeError("joint tensor would exceed " + std::to_string(max_entries) + " entries");
  DenseTensor joint(all_variables(g), cards, 1.0);
  auto values = joint.values();
  std::vector<detail::SubIndex> subs;
  for (const Factor& f : g.factors()) subs.emplace_back(f.scope, f.table.strides());
  detail::Odometer it(joint.shape());
  std::size_t flat = 0;
  do {
    double value = 1.0;
    for (FactorIndex f = 0; f < g.num_factors(); ++f)
      value *= beliefs.factors[f][subs[f].offset(it.coords())];
    for (VarIndex v = 0; v < g.num_variables() && value != 0.0; ++v) {
      const double exponent = static_cast<double>(degree(g, v)) - 1.0;
      if (exponent == 0.0) continue;
      const double b = beliefs.nodes[v][it[v]];
      value = b > 0.0 ? value / std::pow(b, exponent) : 0.0;
    }
    values[flat++] = value;
  } while (it.next());
  return joint;
}

std::vector<double> multipliers_from_scaling(const MotProblem& p, VarIndex j,
                                             const std::vector<double>& u) {
  const double inv_j = 1.0 / static_cast<double>(p.tree.num_variables());
  std::vector<double> lambda(u.size());
  for (std::size_t x = 0; x < u.size(); ++x)
    lambda[x] = -p.epsilon * (detail::safe_log(u[x]) + inv_j);
  (void)j;
  return lambda;
}

double log_partition(const FactorTree& g, const std::vector<std::vector<double>>& weights) {
  const std::size_t nv = g.num_variables();
  auto log_weight = [&](VarIndex v) {
    const auto& w = weights.empty() ? g.variable(v).phi : weights.at(v);
    if (w.size() != g.cardinality(v)) throw ShapeError("weight vector has the wrong length");
    std::vector<double> out(w.size());
    for (std::size_t x = 0; x < w.size(); ++x) out[x] = detail::safe_log(w[x]);
    return out;
  };
  const RootedOrder order = rooted_order(g, 0);
  if (order.order.size() != nv + g.num_factors())
    throw GraphError("log_partition requires a connected tree");

  // upward[e] holds the log message sent across edge e toward the root.
  std::vector<std::vector<double>> upward(g.num_edges());
  std::vector<std::vector<double>> var_acc(nv);
  for (VarIndex v = 0; v < nv; ++v) var_acc[v] = log_weight(v);

  for (std::size_t k = order.order.size(); k-- > 1;) {
    const NodeRef node = order.order[k];
    const EdgeIndex up = *order.parent_edge[k];
    if (node.is_variable()) {
      upward[up] = var_acc[node.index];
      continue;
    }
    const Factor& f = g.factor(node.index);
    const Edge& parent = g.edge(up);
    std::vector<double> msg(g.cardinality(parent.var), kNegInf);
    std::vector<double> terms(f.table.size());
    for (std::size_t flat = 0; flat < f.table.size(); ++flat) {
      double t = detail::safe_log(f.table[flat]);
      for (EdgeIndex e : g.factor_edges(node.index)) {
        if (e == up) continue;
        t += upward[e][f.table.coordinate(flat, g.edge(e).axis)];
      }
      terms[flat] = t;
    }
    // log-sum-exp grouped by the parent coordinate
    std::vector<double> hi(msg.size(), kNegInf);
    for (std::size_t flat = 0; flat < terms.size(); ++flat) {
      auto& h = hi[f.table.coordinate(flat, parent.axis)];
      h = std::max(h, terms[flat]);
    }
    std::vector<double> acc(msg.size(), 0.0);
    for (std::size_t flat = 0; flat < terms.size(); ++flat) {
      const std::size_t x = f.table.coordinate(flat, parent.axis);
      if (hi[x] != kNegInf) acc[x] += std::exp(terms[flat] - hi[x]);
    }
    for (std::size_t x = 0; x < msg.size(); ++x)
      msg[x] = hi[x] == kNegInf ? kNegInf : hi[x] + std::log(acc[x]);
    for (std::size_t x = 0; x < msg.size(); ++x) var_acc[parent.var][x] += msg[x];
  }
  return detail::log_sum_exp(var_acc[order.order[0].index]);
}

double dual_objective(const MotProblem& p, const std::vector<std::vector<double>>& u) {
  const FactorTree& g = p.tree;
  if (u.size() != g.num_variables()) throw ShapeError("need one scaling vector per variable");
  std::vector<std::vector<double>> weights(g.num_variables());
  for (VarIndex v = 0; v < g.num_variables(); ++v) {
    if (u[v].size() != g.cardinality(v)) throw ShapeError("scaling vector has the wrong length");
    weights[v].resize(u[v].size());
    for (std::size_t x = 0; x < u[v].size(); ++x) weights[v][x] = g.variable(v).phi[x] * u[v][x];
  }
  double linear = 0.0;
  for (const auto& [j, mu] : p.constraints) {
    for (std::size_t x = 0; x < mu.size(); ++x)
      if (mu[x] > 0.0 && !(u[j][x] > 0.0))
        throw ProblemError("scaling vector of '" + g.variable(j).id +
                           "' is nonpositive where the marginal has mass");
    const auto lambda = multipliers_from_scaling(p, j, u[j]);
    for (std::size_t x = 0; x < mu.size(); ++x)
      if (mu[x] > 0.0) linear += lambda[x] * mu[x];
  }
  const double mass = std::exp(log_partition(to_potentials(p), weights));
  return -p.epsilon * mass - linear;
}

// ---------------------------------------------------------------------------
// JSON problem files

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ProblemError(field + ": " + what);
}

void flatten_cost(const json& node, const std::vector<std::size_t>& shape, std::size_t depth,
                  const std::string& field, std::vector<double>& out) {
  if (depth == shape.size()) {
    if (!node.is_number()) field_error(field, "expected a number at depth " + std::to_string(depth));
    out.push_back(node.get<double>());
    return;
  }
  if (!node.is_array() || node.size() != shape[depth])
    field_error(field, "expected an array of " + std::to_string(shape[depth]) +
                           " entries at depth " + std::to_string(depth));
  for (const json& child : node) flatten_cost(child, shape, depth + 1, field, out);
}

ordered_json nest_cost(const DenseTensor& t, std::size_t axis, std::size_t offset) {
  ordered_json arr = ordered_json::array();
  const std::size_t stride = t.strides()[axis];
  for (std::size_t x = 0; x < t.shape()[axis]; ++x) {
    const std::size_t at = offset + x * stride;
    if (axis + 1 == t.rank())
      arr.push_back(t[at]);
    else
      arr.push_back(nest_cost(t, axis + 1, at));
  }
  return arr;
}

std::vector<double> number_array(const json& node, const std::string& field) {
  if (!node.is_array()) field_error(field, "expected an array of numbers");
  std::vector<double> out;
  for (const json& x : node) {
    if (!x.is_number()) field_error(field, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

const json& required(const json& obj, const char* key, const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end()) field_error(field, std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

MotProblem parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ProblemError("line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) field_error("<root>", "expected a JSON object");

  MotProblem p;
  const json& vars = required(doc, "variables", "<root>");
  if (!vars.is_array()) field_error("variables", "expected an array");
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const std::string field = "variables[" + std::to_string(k) + "]";
    const json& v = vars[k];
    if (!v.is_object()) field_error(field, "expected an object");
    const json& id = required(v, "id", field);
    const json& card = required(v, "cardinality", field);
    if (!id.is_string()) field_error(field + ".id", "expected a string");
    if (!card.is_number_unsigned() || card.get<std::size_t>() == 0)
      field_error(field + ".cardinality", "expected a positive integer");
    std::vector<double> phi;
    if (v.contains("phi")) phi = number_array(v["phi"], field + ".phi");
    const bool evidence = v.value("evidence", false);
    try {
      p.tree.add_variable(id.get<std::string>(), card.get<std::size_t>(), std::move(phi), evidence);
    } catch (const GraphError& e) {
      field_error(field, e.what());
    }
  }

  const json& factors = required(doc, "factors", "<root>");
  if (!factors.is_array()) field_error("factors", "expected an array");
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const std::string field = "factors[" + std::to_string(k) + "]";
    const json& f = factors[k];
    if (!f.is_object()) field_error(field, "expected an object");
    const json& id = required(f, "id", field);
    const json& scope = required(f, "scope", field);
    if (!id.is_string()) field_error(field + ".id", "expected a string");
    if (!scope.is_array()) field_error(field + ".scope", "expected an array of variable ids");
    std::vector<std::string> names;
    std::vector<std::size_t> shape;
    for (const json& s : scope) {
      if (!s.is_string()) field_error(field + ".scope", "expected an array of variable ids");
      names.push_back(s.get<std::string>());
      auto v = p.tree.find_variable(names.back());
      if (!v) field_error(field + ".scope", "unknown variable '" + names.back() + "'");
      shape.push_back(p.tree.cardinality(*v));
    }
    std::vector<double> values;
    flatten_cost(required(f, "cost", field), shape, 0, field + ".cost", values);
    try {
      p.tree.add_factor(id.get<std::string>(), names, std::move(values));
    } catch (const GraphError& e) {
      field_error(field, e.what());
    }
  }

  const json& eps = required(doc, "epsilon", "<root>");
  if (!eps.is_number()) field_error("epsilon", "expected a number");
  p.epsilon = eps.get<double>();

  if (doc.contains("constraints")) {
    const json& cons = doc["constraints"];
    if (!cons.is_object()) field_error("constraints", "expected an object keyed by variable id");
    for (const auto& [name, mu] : cons.items()) {
      const std::string field = "constraints." + name;
      auto v = p.tree.find_variable(name);
      if (!v) field_error(field, "unknown variable '" + name + "'");
      p.constraints[*v] = number_array(mu, field);
    }
  }
  require_valid(p);
  return p;
}

MotProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError("cannot open problem file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_problem(buffer.str());
}

std::string serialize_problem(const MotProblem& p) {
  ordered_json doc;
  ordered_json vars = ordered_json::array();
  for (const Variable& v : p.tree.variables()) {
    ordered_json entry;
    entry["id"] = v.id;
    entry["cardinality"] = v.cardinality;
    const bool all_ones = std::all_of(v.phi.begin(), v.phi.end(), [](double x) { return x == 1.0; });
    if (!all_ones) entry["phi"] = v.phi;
    if (v.evidence) entry["evidence"] = true;
    vars.push_back(std::move(entry));
  }
  ordered_json factors = ordered_json::array();
  for (const Factor& f : p.tree.factors()) {
    ordered_json entry;
    entry["id"] = f.id;
    ordered_json scope = ordered_json::array();
    for (VarIndex v : f.scope) scope.push_back(p.tree.variable(v).id);
    entry["scope"] = std::move(scope);
    entry["cost"] = f.table.rank() == 0 ? ordered_json(f.table[0]) : nest_cost(f.table, 0, 0);
    factors.push_back(std::move(entry));
  }
  doc["variables"] = std::move(vars);
  doc["factors"] = std::move(factors);
  doc["epsilon"] = p.epsilon;
  ordered_json cons = ordered_json::object();
  for (const auto& [v, mu] : p.constraints) cons[p.tree.variable(v).id] = mu;
  doc["constraints"] = std::move(cons);
  return doc.dump(2) + "\n";
}

void save_problem(const MotProblem& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ProblemError("cannot write problem file '" + path.string() + "'");
  out << serialize_problem(p);
}

}  // namespace treemot
