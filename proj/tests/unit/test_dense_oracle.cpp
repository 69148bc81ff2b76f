#include <cmath>
#include <random>

#include "doctest.h"
#include "support/random_tree.hpp"
#include "treemot/dense_oracle.hpp"

using namespace treemot;

namespace {

MotProblem two_marginal(std::vector<double> cost, std::size_t d, std::vector<double> mu1,
                        std::vector<double> mu2, double eps = 1.0) {
  MotProblem p;
  p.epsilon = eps;
  p.tree.add_variable("x1", d);
  p.tree.add_variable("x2", d);
  p.tree.add_factor("a", std::vector<std::string>{"x1", "x2"}, std::move(cost));
  p.constraints[0] = std::move(mu1);
  p.constraints[1] = std::move(mu2);
  return p;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> v(d);
  double s = 0.0;
  for (double& x : v) s += (x = u(rng));
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

TEST_SUITE("dense_oracle") {

TEST_CASE("full_joint") {
  FactorTree g;
  g.add_variable("x1", 2);
  g.add_variable("x2", 2);
  g.add_factor("a", std::vector<std::string>{"x1", "x2"}, std::vector<double>(4, 1.0));
  Joint j = full_joint(g);
  CHECK(j.z == 4.0);
  for (double x : j.joint.values()) CHECK(x == 0.25);

  g.add_variable("x3", 2);
  g.add_factor("b", std::vector<std::string>{"x2", "x3"}, std::vector<double>(4, 1.0));
  j = full_joint(g);
  CHECK(j.z == 8.0);
  for (double x : j.joint.values()) CHECK(x == 0.125);
  CHECK(brute_marginal(g, 2) == std::vector<double>{0.5, 0.5});

  std::mt19937_64 rng(1);
  testing::RandomTreeSpec spec;
  spec.variables = 4;
  for (int rep = 0; rep < 10; ++rep) {
    MotProblem p = testing::random_problem(rng, spec);
    testing::randomize_phi(rng, p.tree);
    const FactorTree k = to_potentials(p);
    // loop oracle over every assignment
    const auto cards = k.cardinalities();
    std::vector<std::size_t> x(cards.size(), 0);
    double z = 0.0;
    while (true) {
      double w = 1.0;
      for (VarIndex v = 0; v < cards.size(); ++v) w *= k.variable(v).phi[x[v]];
      for (const Factor& f : k.factors()) {
        std::vector<std::size_t> idx;
        for (VarIndex v : f.scope) idx.push_back(x[v]);
        w *= f.table.at(idx);
      }
      z += w;
      std::size_t a = cards.size();
      while (a > 0 && ++x[a - 1] == cards[a - 1]) x[--a] = 0;
      if (a == 0) break;
    }
    CHECK(full_joint(k).z == doctest::Approx(z).epsilon(1e-13));
  }

  FactorTree sym;
  sym.add_variable("x1", 2);
  sym.add_variable("x2", 2);
  sym.add_factor("a", std::vector<std::string>{"x1", "x2"}, std::vector<double>{2, 0, 0, 2});
  CHECK(brute_marginal(sym, 0) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("dense cap") {
  FactorTree g;
  g.add_variable("x0", 10);
  for (int k = 1; k < 8; ++k) {
    g.add_variable("x" + std::to_string(k), 10);
    g.add_factor("f" + std::to_string(k),
                 std::vector<std::string>{"x" + std::to_string(k - 1), "x" + std::to_string(k)},
                 std::vector<double>(100, 1.0));
  }
  try {
    full_joint(g);
    FAIL("expected a cap error");
  } catch (const DenseCapError& e) {
    CHECK(std::string(e.what()).find("prod(d_j)") != std::string::npos);
  }
}

TEST_CASE("vanilla iterative scaling fixed points") {
  const MotProblem flat = two_marginal({0, 0, 0, 0}, 2, {0.5, 0.5}, {0.5, 0.5});
  const VanillaResult r0 = solve_vanilla_is(flat);
  CHECK(r0.stats.converged());
  for (double x : r0.plan.values()) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));

  // symmetric plan: B(0,0) = B(1,1) = 1 / (2 + 2 e^-1)
  constexpr double kDiag = 0.36552928931500245;
  CHECK(kDiag == doctest::Approx(1.0 / (2.0 + 2.0 * std::exp(-1.0))).epsilon(1e-16));
  const VanillaResult r = solve_vanilla_is(two_marginal({0, 1, 1, 0}, 2, {0.5, 0.5}, {0.5, 0.5}));
  CHECK(r.stats.converged());
  CHECK(std::abs(r.plan[0] - kDiag) < 1e-14);
  CHECK(std::abs(r.plan[3] - kDiag) < 1e-14);
  CHECK(std::abs(r.plan[1] - r.plan[2]) < 1e-15);
}

TEST_CASE("empty constraint set returns the normalized kernel") {
  std::mt19937_64 rng(2);
  testing::RandomTreeSpec spec;
  spec.constrain_leaves = false;
  const MotProblem p = testing::random_problem(rng, spec);
  const VanillaResult r = solve_vanilla_is(p);
  CHECK(r.stats.iterations == 1);
  const DenseTensor exact = full_joint(to_potentials(p)).joint;
  for (std::size_t k = 0; k < exact.size(); ++k) CHECK(r.plan[k] == doctest::Approx(exact[k]).epsilon(1e-14));
  CHECK_FALSE(r.stats.duality_gap.has_value());
}

TEST_CASE("two-marginal updates coincide with matrix scaling") {
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> c(0.0, 2.0);
  const std::size_t d = 4;
  std::vector<double> cost(d * d);
  for (double& x : cost) x = c(rng);
  const MotProblem p = two_marginal(cost, d, random_simplex(rng, d), random_simplex(rng, d), 0.5);
  const auto& mu1 = p.constraints.at(0);
  const auto& mu2 = p.constraints.at(1);

  std::vector<double> k(d * d);
  for (std::size_t i = 0; i < d * d; ++i) k[i] = std::exp(-cost[i] / 0.5);
  std::vector<double> u1(d, std::exp(-0.5)), u2(d, std::exp(-0.5));
  for (std::size_t it = 1; it <= 100; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += k[i * d + j] * u2[j];
      u1[i] = mu1[i] / s;
    }
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += k[i * d + j] * u1[i];
      u2[j] = mu2[j] / s;
    }
    VanillaOptions vo;
    vo.solve.tol = -1.0;  // run exactly `it` sweeps
    vo.solve.max_iters = it;
    const VanillaResult r = solve_vanilla_is(p, vo);
    REQUIRE(r.scaling.iterations == it);
    for (std::size_t x = 0; x < d; ++x) {
      CHECK(std::abs(r.scaling.u[0][x] - u1[x]) <= 1e-14 * u1[x]);
      CHECK(std::abs(r.scaling.u[1][x] - u2[x]) <= 1e-14 * u2[x]);
    }
  }
}

TEST_CASE("property: dual ascent and final gap") {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    testing::RandomTreeSpec spec;
    spec.max_card = 4;
    spec.epsilon = std::vector<double>{0.5, 1.0, 2.0}[rep % 3];
    const MotProblem p = testing::random_problem(rng, spec);
    VanillaOptions vo;
    vo.record_dual = true;
    vo.gap_tol = 1e-8;
    vo.solve.tol = 1e-12;
    const VanillaResult r = solve_vanilla_is(p, vo);
    CHECK(r.stats.converged());
    for (std::size_t k = 1; k < r.dual_trace.size(); ++k)
      CHECK(r.dual_trace[k] >= r.dual_trace[k - 1] - 1e-12);
    REQUIRE(r.stats.duality_gap.has_value());
    CHECK(*r.stats.duality_gap <= 1e-8);
    CHECK(*r.stats.duality_gap >= -1e-10);
  }
}

TEST_CASE("property: the last updated constraint holds right after its update") {
  std::mt19937_64 rng(78);
  for (int rep = 0; rep < 10; ++rep) {
    const MotProblem p = testing::random_problem(rng, {});
    VanillaOptions vo;
    vo.solve.max_iters = 1;
    const VanillaResult r = solve_vanilla_is(p, vo);
    const auto& [j, mu] = *p.constraints.rbegin();
    const DenseTensor pj = project(r.plan, j);
    for (std::size_t x = 0; x < mu.size(); ++x) CHECK(std::abs(pj[x] - mu[x]) <= 1e-12);
  }
}

TEST_CASE("infeasible and non-converged runs") {
  MotProblem p;
  p.tree.add_variable("x1", 2);
  p.tree.add_variable("x2", 2);
  p.tree.add_factor("a", std::vector<std::string>{"x1", "x2"}, std::vector<double>(4, 0.0));
  p.tree.set_phi(0, {1.0, 0.0});
  p.constraints[0] = {0.5, 0.5};
  // phi zeros need the evidence flag to pass validation
  CHECK_THROWS(solve_vanilla_is(p));

  MotProblem q;
  q.tree.add_variable("x1", 2, {1.0, 0.0}, true);
  q.tree.add_variable("x2", 2);
  q.tree.add_factor("a", std::vector<std::string>{"x1", "x2"}, std::vector<double>(4, 0.0));
  q.constraints[0] = {0.5, 0.5};
  CHECK_THROWS_AS(solve_vanilla_is(q), InfeasibleError);

  std::mt19937_64 rng(3);
  const MotProblem h = testing::random_problem(rng, {});
  VanillaOptions vo;
  vo.solve.max_iters = 1;
  vo.solve.tol = 1e-300;
  const VanillaResult r = solve_vanilla_is(h, vo);
  CHECK(r.stats.status == SolveStatus::max_iterations);
  CHECK(r.stats.residual > 0.0);
}

}
