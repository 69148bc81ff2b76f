#include <cmath>
#include <random>

#include "doctest.h"
#include "treemot/tensor.hpp"

using namespace treemot;

namespace {

DenseTensor random_tensor(std::mt19937_64& rng, std::vector<VarIndex> scope,
                          std::vector<std::size_t> shape) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(checked_volume(shape));
  for (double& x : v) x = u(rng);
  return DenseTensor(std::move(scope), std::move(shape), std::move(v));
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("project sums out the other modes") {
  const DenseTensor u = DenseTensor::vector(0, {1, 2});
  const DenseTensor v = DenseTensor::vector(1, {3, 4});
  const std::vector<DenseTensor> parts{u, v};
  const DenseTensor t = outer(parts);
  const DenseTensor p = project(t, 0);
  CHECK(p.values()[0] == 7.0);
  CHECK(p.values()[1] == 14.0);

  const DenseTensor m({0, 1}, {2, 2}, std::vector<double>{1, 2, 3, 4});
  const DenseTensor col = project(m, 1);
  CHECK(col.values()[0] == 4.0);
  CHECK(col.values()[1] == 6.0);
  CHECK_THROWS_AS(project(m, 7), ScopeError);
}

TEST_CASE("project matches loop summation on a 3-mode tensor") {
  std::mt19937_64 rng(3);
  const DenseTensor t = random_tensor(rng, {4, 1, 9}, {2, 3, 4});
  for (std::size_t axis = 0; axis < 3; ++axis) {
    std::vector<double> expect(t.shape()[axis], 0.0);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t c = 0; c < 4; ++c) {
          const std::size_t idx[3] = {a, b, c};
          expect[idx[axis]] += t.at({a, b, c});
        }
    const DenseTensor p = project(t, t.scope()[axis]);
    for (std::size_t x = 0; x < expect.size(); ++x) CHECK(p.values()[x] == doctest::Approx(expect[x]).epsilon(1e-14));
  }
}

TEST_CASE("outer product") {
  const std::vector<DenseTensor> ones{DenseTensor::vector(0, {1, 1}), DenseTensor::vector(1, {1, 1, 1})};
  const DenseTensor t = outer(ones);
  CHECK(t.shape() == std::vector<std::size_t>{2, 3});
  for (double x : t.values()) CHECK(x == 1.0);

  const std::vector<DenseTensor> uv{DenseTensor::vector(0, {1, 2}), DenseTensor::vector(1, {3, 4})};
  const DenseTensor w = outer(uv);
  CHECK(w.at({0, 0}) == 3.0);
  CHECK(w.at({0, 1}) == 4.0);
  CHECK(w.at({1, 0}) == 6.0);
  CHECK(w.at({1, 1}) == 8.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::vector<double> a(2), b(3), c(4);
  for (auto* v : {&a, &b, &c})
    for (double& x : *v) x = u(rng);
  const std::vector<DenseTensor> three{DenseTensor::vector(0, a), DenseTensor::vector(1, b),
                                       DenseTensor::vector(2, c)};
  const DenseTensor o = outer(three);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) CHECK(o.at({i, j, k}) == a[i] * b[j] * c[k]);

  const std::vector<DenseTensor> dup{DenseTensor::vector(0, {1}), DenseTensor::vector(0, {1})};
  CHECK_THROWS(outer(dup));
}

TEST_CASE("elementwise and maps") {
  std::mt19937_64 rng(7);
  const DenseTensor a = random_tensor(rng, {0, 1}, {3, 2});
  DenseTensor b = random_tensor(rng, {0, 1}, {3, 2});
  for (std::size_t k = 0; k < b.size(); ++k) b[k] += 0.1;
  const DenseTensor ones({0, 1}, {3, 2}, 1.0);
  CHECK(elementwise(a, ones, ElementwiseOp::mul) == a);
  const DenseTensor back = map_exp(map_log(b));
  for (std::size_t k = 0; k < b.size(); ++k) CHECK(std::abs(back[k] - b[k]) <= 1e-12);
  const DenseTensor q = elementwise(elementwise(a, b, ElementwiseOp::mul), b, ElementwiseOp::div);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(q[k] == doctest::Approx(a[k]).epsilon(1e-14));

  const DenseTensor z({0}, {2}, std::vector<double>{0, 1});
  const DenseTensor zd({0}, {2}, std::vector<double>{0, 2});
  const DenseTensor r = elementwise(z, zd, ElementwiseOp::div);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.5);
  CHECK_THROWS_AS(elementwise(DenseTensor({0}, {2}, 1.0), z, ElementwiseOp::div), std::domain_error);
  CHECK_THROWS_AS(elementwise(a, z, ElementwiseOp::mul), ShapeError);
  CHECK(map_pow(DenseTensor({0}, {2}, std::vector<double>{4, 9}), 0.5)[1] == 3.0);
}

TEST_CASE("contract_marginal") {
  std::mt19937_64 rng(11);
  const DenseTensor t = random_tensor(rng, {0, 1, 2, 3}, {2, 3, 2, 3});
  const std::vector<VarIndex> all{0, 1, 2, 3};
  CHECK(contract_marginal(t, all) == t);
  const std::vector<VarIndex> one{2};
  const DenseTensor c1 = contract_marginal(t, one);
  const DenseTensor p1 = project(t, 2);
  for (std::size_t k = 0; k < 2; ++k) CHECK(c1[k] == doctest::Approx(p1[k]).epsilon(1e-14));

  const std::vector<VarIndex> keep{1, 3};
  const DenseTensor c = contract_marginal(t, keep);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t d = 0; d < 3; ++d) {
      double s = 0.0;
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t cc = 0; cc < 2; ++cc) s += t.at({a, b, cc, d});
      CHECK(c.at({b, d}) == doctest::Approx(s).epsilon(1e-14));
    }
  const std::vector<VarIndex> bad{8};
  CHECK_THROWS_AS(contract_marginal(t, bad), ScopeError);
}

TEST_CASE("properties: mass conservation, order independence, scaling identity") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const DenseTensor t = random_tensor(rng, {0, 1, 2}, {3, 2, 4});
    for (VarIndex v : t.scope())
      CHECK(std::abs(project(t, v).sum() - t.sum()) <= 1e-12 * t.sum());
    const DenseTensor x = sum_out(sum_out(t, 0), 2);
    const DenseTensor y = sum_out(sum_out(t, 2), 0);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(x[k] == doctest::Approx(y[k]).epsilon(1e-14));
  }
  // project(K (.) (u1 x u2), first) = u1 (.) (K u2)
  const DenseTensor k = random_tensor(rng, {0, 1}, {3, 4});
  const std::vector<double> u1{0.5, 1.5, 2.0}, u2{1.0, 0.2, 0.7, 3.0};
  DenseTensor b = k;
  scale_mode(b, 0, u1);
  scale_mode(b, 1, u2);
  const DenseTensor p = project(b, 0);
  for (std::size_t i = 0; i < 3; ++i) {
    double ku = 0.0;
    for (std::size_t j = 0; j < 4; ++j) ku += k.at({i, j}) * u2[j];
    CHECK(p[i] == doctest::Approx(u1[i] * ku).epsilon(1e-14));
  }
}

TEST_CASE("construction checks") {
  CHECK_THROWS_AS(DenseTensor({0, 1}, {2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS(DenseTensor({0}, {2}, std::vector<double>{1, INFINITY}));
  CHECK_THROWS_AS(normalized(DenseTensor({0}, {2}, 0.0)), std::domain_error);
}

}
