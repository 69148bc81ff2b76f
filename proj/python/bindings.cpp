#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "treemot/bench.hpp"
#include "treemot/cli.hpp"
#include "treemot/counting.hpp"
#include "treemot/dense_oracle.hpp"
#include "treemot/isbp.hpp"
#include "treemot/norm_product.hpp"

namespace py = pybind11;
using namespace treemot;

namespace {

py::array_t<double> to_array(const DenseTensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

py::dict beliefs_dict(const FactorTree& g, const BeliefSet& b) {
  py::dict nodes, factors;
  for (VarIndex v = 0; v < g.num_variables(); ++v)
    nodes[py::str(g.variable(v).id)] = py::array_t<double>(b.nodes[v].size(), b.nodes[v].data());
  for (FactorIndex f = 0; f < b.factors.size(); ++f) factors[py::str(g.factor(f).id)] = to_array(b.factors[f]);
  py::dict out;
  out["nodes"] = nodes;
  out["factors"] = factors;
  return out;
}

py::dict solve(const MotProblem& p, const std::string& algorithm, double tol, std::size_t max_iters,
               const std::string& counting, bool allow_nonconvex) {
  SolveOptions options;
  options.tol = tol;
  options.max_iters = max_iters;
  BeliefSet beliefs;
  SolveStats stats;
  {
    py::gil_scoped_release release;
    if (algorithm == "vanilla-is") {
      VanillaOptions vo;
      vo.solve = options;
      VanillaResult r = solve_vanilla_is(p, vo);
      beliefs = r.beliefs(p.tree);
      stats = std::move(r.stats);
    } else if (algorithm == "isbp") {
      IsbpResult r = solve_isbp(p, options);
      beliefs = std::move(r.beliefs);
      stats = std::move(r.stats);
    } else if (algorithm == "cnp") {
      CnpOptions co;
      co.solve = options;
      co.allow_nonconvex = allow_nonconvex;
      CnpResult r = solve_cnp(p, counting_from_selector(p.tree, counting), co);
      beliefs = std::move(r.beliefs);
      stats = std::move(r.stats);
    } else {
      throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
    }
  }
  py::dict out = beliefs_dict(p.tree, beliefs);
  out["status"] = to_string(stats.status);
  out["iterations"] = stats.iterations;
  out["residual"] = stats.residual;
  out["duality_gap"] = stats.duality_gap ? py::object(py::float_(*stats.duality_gap)) : py::object(py::none());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Entropy-regularized multi-marginal optimal transport on factor trees.";

  py::register_exception<ProblemError>(m, "ProblemError", PyExc_ValueError);
  py::register_exception<GraphError>(m, "GraphError", PyExc_ValueError);
  py::register_exception<CountingError>(m, "CountingError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<DenseCapError>(m, "DenseCapError", PyExc_MemoryError);

  py::class_<MotProblem>(m, "Problem")
      .def_static("from_json", &parse_problem, py::arg("text"))
      .def_static("load", [](const std::string& path) { return load_problem(path); }, py::arg("path"))
      .def("to_json", &serialize_problem)
      .def("save", [](const MotProblem& p, const std::string& path) { save_problem(p, path); }, py::arg("path"))
      .def_readwrite("epsilon", &MotProblem::epsilon)
      .def_property_readonly("variables",
                             [](const MotProblem& p) {
                               std::vector<std::string> ids;
                               for (const Variable& v : p.tree.variables()) ids.push_back(v.id);
                               return ids;
                             })
      .def_property_readonly("factors",
                             [](const MotProblem& p) {
                               std::vector<std::string> ids;
                               for (const Factor& f : p.tree.factors()) ids.push_back(f.id);
                               return ids;
                             })
      .def_property_readonly("constraints",
                             [](const MotProblem& p) {
                               py::dict out;
                               for (const auto& [j, mu] : p.constraints) out[py::str(p.tree.variable(j).id)] = mu;
                               return out;
                             })
      .def("validate", [](const MotProblem& p) { return validate(p).message; })
      .def("__repr__", [](const MotProblem& p) {
        std::ostringstream s;
        s << "<Problem " << p.tree.num_variables() << " variables, " << p.tree.num_factors() << " factors, "
          << p.constraints.size() << " constrained, epsilon=" << p.epsilon << ">";
        return s.str();
      });

  m.def("solve", &solve, py::arg("problem"), py::arg("algorithm") = "isbp", py::arg("tol") = 1e-9,
        py::arg("max_iters") = 100000, py::arg("counting") = "uniform", py::arg("allow_nonconvex") = false,
        "Solve and return beliefs keyed by variable and factor id.");

  m.def(
      "brute_marginals",
      [](const MotProblem& p) {
        const Joint j = full_joint(to_potentials(p));
        return beliefs_dict(p.tree, beliefs_from_joint(p.tree, j.joint));
      },
      py::arg("problem"), "Exact marginals of the unconstrained model by dense enumeration.");

  m.def(
      "counting_numbers",
      [](const MotProblem& p, const std::string& selector) {
        const CountingNumbers c = counting_from_selector(p.tree, selector);
        py::dict out;
        out["c_var"] = c.c_var;
        out["c_factor"] = c.c_factor;
        out["c_edge"] = c.c_edge;
        out["convex"] = c.convex;
        return out;
      },
      py::arg("problem"), py::arg("selector") = "uniform");

  m.def(
      "bench_problem",
      [](const std::string& family, std::size_t J, std::size_t d, std::uint64_t seed, double epsilon) {
        return make_bench_problem(parse_family(family), J, d, seed, epsilon);
      },
      py::arg("family"), py::arg("J"), py::arg("d"), py::arg("seed") = 1, py::arg("epsilon") = 1.0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command line with `args` and return (exit code, stdout, stderr).");
}
