#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace treemot::detail {

/// Row-major multi-index counter: the last axis turns fastest.
class Odometer {
 public:
  explicit Odometer(std::span<const std::size_t> shape)
      : shape_(shape.begin(), shape.end()), coords_(shape.size(), 0) {}

  const std::vector<std::size_t>& coords() const { return coords_; }
  std::size_t operator[](std::size_t axis) const { return coords_[axis]; }

  /// Advances to the next multi-index; false after the last one.
  bool next() {
    for (std::size_t k = coords_.size(); k-- > 0;) {
      if (++coords_[k] < shape_[k]) return true;
      coords_[k] = 0;
    }
    return false;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<std::size_t> coords_;
};

/// Maps full-tensor coordinates to the flat offset of a sub-tensor whose modes
/// are a subset of the full modes.
class SubIndex {
 public:
  /// `positions[a]` is the full-tensor axis of sub-tensor axis `a`.
  SubIndex(std::span<const std::size_t> positions, std::span<const std::size_t> sub_strides)
      : positions_(positions.begin(), positions.end()),
        strides_(sub_strides.begin(), sub_strides.end()) {}

  std::size_t offset(const std::vector<std::size_t>& full_coords) const {
    std::size_t off = 0;
    for (std::size_t a = 0; a < positions_.size(); ++a)
      off += full_coords[positions_[a]] * strides_[a];
    return off;
  }

 private:
  std::vector<std::size_t> positions_;
  std::vector<std::size_t> strides_;
};

}  // namespace treemot::detail
