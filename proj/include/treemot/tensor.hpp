#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace treemot {

/// Index of a variable inside a FactorTree. Tensor scopes are lists of these.
using VarIndex = std::size_t;

class ScopeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense nonnegative array over an ordered variable scope, row-major (the last
/// scope variable varies fastest).
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(std::vector<VarIndex> scope, std::vector<std::size_t> shape,
              double fill = 0.0);
  DenseTensor(std::vector<VarIndex> scope, std::vector<std::size_t> shape,
              std::vector<double> values);

  /// 1-mode tensor over `var`.
  static DenseTensor vector(VarIndex var, std::vector<double> values);

  const std::vector<VarIndex>& scope() const { return scope_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<std::size_t>& strides() const { return strides_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::size_t rank() const { return scope_.size(); }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t flat) const { return values_[flat]; }
  double& operator[](std::size_t flat) { return values_[flat]; }

  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  /// Axis position of `var` in the scope; throws ScopeError when absent.
  std::size_t axis_of(VarIndex var) const;
  bool has(VarIndex var) const;

  /// Coordinate along `axis` of the entry stored at `flat`.
  std::size_t coordinate(std::size_t flat, std::size_t axis) const {
    return (flat / strides_[axis]) % shape_[axis];
  }

  double sum() const;

  bool same_layout(const DenseTensor& other) const {
    return scope_ == other.scope_ && shape_ == other.shape_;
  }

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<VarIndex> scope_;
  std::vector<std::size_t> shape_;
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
};

/// Marginal on `keep`: sums every other mode out.
DenseTensor project(const DenseTensor& t, VarIndex keep);

/// Sums out every variable not in `keep_set`; the result keeps the original
/// relative order of the surviving modes.
DenseTensor contract_marginal(const DenseTensor& t,
                              std::span<const VarIndex> keep_set);

/// Sums out a single variable.
DenseTensor sum_out(const DenseTensor& t, VarIndex var);

/// Outer product of 1-mode tensors; scopes must be pairwise distinct.
DenseTensor outer(std::span<const DenseTensor> vectors);

enum class ElementwiseOp { mul, div };

/// Entrywise product or quotient of tensors with identical layout. For
/// division 0/0 is 0 and x/0 with x != 0 throws.
DenseTensor elementwise(const DenseTensor& a, const DenseTensor& b,
                        ElementwiseOp op);

/// Multiplies `t` in place by `factor` broadcast along mode `var`.
void scale_mode(DenseTensor& t, VarIndex var, std::span<const double> factor);

DenseTensor map_exp(const DenseTensor& t);
DenseTensor map_log(const DenseTensor& t);
DenseTensor map_pow(const DenseTensor& t, double exponent);
DenseTensor map(const DenseTensor& t, const std::function<double(double)>& f);

/// Divides by the total mass. Throws when the mass is zero.
DenseTensor normalized(const DenseTensor& t);

/// Returns the number of entries `prod(shape)` or throws on overflow.
std::size_t checked_volume(std::span<const std::size_t> shape);

}  // namespace treemot
