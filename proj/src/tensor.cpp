#include "treemot/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace treemot {

namespace {

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) strides[k - 1] = strides[k] * shape[k];
  return strides;
}

void check_scope(const std::vector<VarIndex>& scope,
                 const std::vector<std::size_t>& shape) {
  if (scope.size() != shape.size())
    throw ShapeError("tensor scope and shape have different lengths");
  for (std::size_t a = 0; a < scope.size(); ++a) {
    if (shape[a] == 0) throw ShapeError("tensor mode with zero cardinality");
    for (std::size_t b = a + 1; b < scope.size(); ++b)
      if (scope[a] == scope[b])
        throw ScopeError("duplicate variable " + std::to_string(scope[a]) +
                         " in tensor scope");
  }
}

}  // namespace

std::size_t checked_volume(std::span<const std::size_t> shape) {
  std::size_t volume = 1;
  for (std::size_t d : shape) {
    if (d != 0 && volume > std::numeric_limits<std::size_t>::max() / d)
      throw ShapeError("tensor volume overflows size_t");
    volume *= d;
  }
  return volume;
}

DenseTensor::DenseTensor(std::vector<VarIndex> scope,
                         std::vector<std::size_t> shape, double fill)
    : scope_(std::move(scope)), shape_(std::move(shape)) {
  check_scope(scope_, shape_);
  strides_ = row_major_strides(shape_);
  values_.assign(checked_volume(shape_), fill);
}

DenseTensor::DenseTensor(std::vector<VarIndex> scope,
                         std::vector<std::size_t> shape,
                         std::vector<double> values)
    : scope_(std::move(scope)), shape_(std::move(shape)), values_(std::move(values)) {
  check_scope(scope_, shape_);
  strides_ = row_major_strides(shape_);
  if (values_.size() != checked_volume(shape_))
    throw ShapeError("tensor has " + std::to_string(values_.size()) +
                     " values but its shape holds " +
                     std::to_string(checked_volume(shape_)));
  for (double v : values_)
    if (!std::isfinite(v)) throw ShapeError("tensor entries must be finite");
}

DenseTensor DenseTensor::vector(VarIndex var, std::vector<double> values) {
  const std::size_t d = values.size();
  return DenseTensor({var}, {d}, std::move(values));
}

namespace {

std::size_t flat_index(std::span<const std::size_t> index, const std::vector<std::size_t>& shape,
                       const std::vector<std::size_t>& strides) {
  if (index.size() != shape.size()) throw ShapeError("index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t a = 0; a < index.size(); ++a) {
    if (index[a] >= shape[a]) throw ShapeError("index out of range");
    flat += index[a] * strides[a];
  }
  return flat;
}

}  // namespace

double DenseTensor::at(std::span<const std::size_t> index) const {
  return values_[flat_index(index, shape_, strides_)];
}

double& DenseTensor::at(std::span<const std::size_t> index) {
  return values_[flat_index(index, shape_, strides_)];
}

std::size_t DenseTensor::axis_of(VarIndex var) const {
  auto it = std::find(scope_.begin(), scope_.end(), var);
  if (it == scope_.end())
    throw ScopeError("variable " + std::to_string(var) + " is not in the tensor scope");
  return static_cast<std::size_t>(it - scope_.begin());
}

bool DenseTensor::has(VarIndex var) const {
  return std::find(scope_.begin(), scope_.end(), var) != scope_.end();
}

double DenseTensor::sum() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

DenseTensor project(const DenseTensor& t, VarIndex keep) {
  const std::size_t axis = t.axis_of(keep);
  const std::size_t d = t.shape()[axis];
  const std::size_t stride = t.strides()[axis];
  std::vector<double> out(d, 0.0);
  const auto values = t.values();
  // Blocks of `stride` consecutive entries share the same coordinate on `axis`.
  for (std::size_t block = 0; block * stride < values.size(); ++block) {
    const std::size_t x = block % d;
    double acc = 0.0;
    const std::size_t begin = block * stride;
    for (std::size_t k = 0; k < stride; ++k) acc += values[begin + k];
    out[x] += acc;
  }
  return DenseTensor::vector(keep, std::move(out));
}

DenseTensor sum_out(const DenseTensor& t, VarIndex var) {
  const std::size_t axis = t.axis_of(var);
  std::vector<VarIndex> scope;
  std::vector<std::size_t> shape;
  for (std::size_t a = 0; a < t.rank(); ++a) {
    if (a == axis) continue;
    scope.push_back(t.scope()[a]);
    shape.push_back(t.shape()[a]);
  }
  DenseTensor out(std::move(scope), std::move(shape), 0.0);
  const std::size_t d = t.shape()[axis];
  const std::size_t inner = t.strides()[axis];
  const std::size_t outer_count = t.size() / (d * inner);
  const auto in = t.values();
  auto dst = out.values();
  for (std::size_t o = 0; o < outer_count; ++o)
    for (std::size_t x = 0; x < d; ++x)
      for (std::size_t i = 0; i < inner; ++i)
        dst[o * inner + i] += in[(o * d + x) * inner + i];
  return out;
}

DenseTensor contract_marginal(const DenseTensor& t,
                              std::span<const VarIndex> keep_set) {
  for (VarIndex v : keep_set) t.axis_of(v);
  DenseTensor out = t;
  for (VarIndex v : t.scope())
    if (std::find(keep_set.begin(), keep_set.end(), v) == keep_set.end())
      out = sum_out(out, v);
  return out;
}

DenseTensor outer(std::span<const DenseTensor> vectors) {
  std::vector<VarIndex> scope;
  std::vector<std::size_t> shape;
  for (const DenseTensor& v : vectors) {
    if (v.rank() != 1) throw ShapeError("outer expects 1-mode tensors");
    scope.push_back(v.scope()[0]);
    shape.push_back(v.shape()[0]);
  }
  DenseTensor out(std::move(scope), std::move(shape), 1.0);
  for (const DenseTensor& v : vectors) scale_mode(out, v.scope()[0], v.values());
  return out;
}

DenseTensor elementwise(const DenseTensor& a, const DenseTensor& b,
                        ElementwiseOp op) {
  if (!a.same_layout(b)) throw ShapeError("elementwise operands differ in scope or shape");
  DenseTensor out = a;
  auto dst = out.values();
  const auto rhs = b.values();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (op == ElementwiseOp::mul) {
      dst[k] *= rhs[k];
    } else if (rhs[k] == 0.0) {
      if (dst[k] != 0.0)
        throw std::domain_error("division by zero at flat index " + std::to_string(k));
    } else {
      dst[k] /= rhs[k];
    }
  }
  return out;
}

void scale_mode(DenseTensor& t, VarIndex var, std::span<const double> factor) {
  const std::size_t axis = t.axis_of(var);
  const std::size_t d = t.shape()[axis];
  if (factor.size() != d) throw ShapeError("scaling vector length mismatch");
  const std::size_t stride = t.strides()[axis];
  auto values = t.values();
  for (std::size_t block = 0; block * stride < values.size(); ++block) {
    const double f = factor[block % d];
    const std::size_t begin = block * stride;
    for (std::size_t k = 0; k < stride; ++k) values[begin + k] *= f;
  }
}

DenseTensor map(const DenseTensor& t, const std::function<double(double)>& f) {
  DenseTensor out = t;
  for (double& v : out.values()) v = f(v);
  return out;
}

DenseTensor map_exp(const DenseTensor& t) {
  return map(t, [](double v) { return std::exp(v); });
}

DenseTensor map_log(const DenseTensor& t) {
  for (double v : t.values())
    if (v <= 0.0) throw std::domain_error("log of a nonpositive tensor entry");
  return map(t, [](double v) { return std::log(v); });
}

DenseTensor map_pow(const DenseTensor& t, double exponent) {
  if (exponent != std::floor(exponent))
    for (double v : t.values())
      if (v < 0.0) throw std::domain_error("fractional power of a negative entry");
  return map(t, [exponent](double v) { return std::pow(v, exponent); });
}

DenseTensor normalized(const DenseTensor& t) {
  const double mass = t.sum();
  if (!(mass > 0.0)) throw std::domain_error("cannot normalize a tensor with zero mass");
  return map(t, [mass](double v) { return v / mass; });
}

}  // namespace treemot
