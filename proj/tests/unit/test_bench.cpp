#include <sstream>

#include "doctest.h"
#include "treemot/bench.hpp"

using namespace treemot;

TEST_SUITE("bench") {

TEST_CASE("families") {
  for (const char* name : {"line", "hmm", "star", "long-star"}) CHECK(to_string(parse_family(name)) == name);
  CHECK_THROWS(parse_family("ring"));

  const MotProblem line = make_bench_problem(GraphFamily::line, 6, 3, 1);
  CHECK(line.tree.num_variables() == 6);
  CHECK(line.constraints.size() == 2);
  const MotProblem hmm = make_bench_problem(GraphFamily::hmm, 10, 2, 1);
  CHECK(hmm.tree.num_variables() == 10);
  CHECK(hmm.constraints.size() == 5);
  const MotProblem star = make_bench_problem(GraphFamily::star, 5, 2, 1);
  CHECK(degree(star.tree, 0) == 4);
  CHECK(star.constraints.size() == 4);
  const MotProblem ls = make_bench_problem(GraphFamily::long_star, 9, 2, 1);
  CHECK(ls.tree.num_variables() == 9);
  CHECK(ls.constraints.size() == 4);
  for (const MotProblem* p : {&line, &hmm, &star, &ls}) CHECK(validate(*p).ok());

  // deterministic in the seed
  CHECK(serialize_problem(make_bench_problem(GraphFamily::hmm, 8, 3, 5)) ==
        serialize_problem(make_bench_problem(GraphFamily::hmm, 8, 3, 5)));
}

TEST_CASE("line family: all algorithms agree") {
  BenchSpec spec;
  spec.families = {GraphFamily::line};
  spec.J = {4, 6};
  spec.d = {2};
  const auto rows = run_bench(spec);
  REQUIRE(rows.size() == 6);
  for (const BenchRow& r : rows) {
    CHECK(r.status == "converged");
    CHECK(r.rel_error <= 1e-4);
  }
  for (std::size_t k = 0; k < rows.size(); k += 3) {
    CHECK(relative_node_error(rows[k + 1].beliefs, rows[k].beliefs) <= 2e-4);
    CHECK(relative_node_error(rows[k + 2].beliefs, rows[k].beliefs) <= 2e-4);
  }
  std::ostringstream csv;
  write_bench_csv(csv, rows);
  CHECK(csv.str().rfind("family,J,d,algorithm,rep,iterations,wall_time_s,status,rel_error\n", 0) == 0);
}

TEST_CASE("dense solver is skipped above the cap") {
  BenchSpec spec;
  spec.families = {GraphFamily::line};
  spec.J = {24};
  spec.d = {2};
  spec.algorithms = {"vanilla-is"};
  const auto rows = run_bench(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status == "skipped");
}

}
