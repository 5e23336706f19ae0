#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "flsim/errors.hpp"

namespace flsim {

// Dimensions of one parameter block (a weight matrix or a bias row).
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// Flat model parameters plus the block shapes needed to view them as
// matrices. Aggregation operators treat it as a plain vector; only the
// model layer cares about the block structure.
struct ParamVector {
  std::vector<double> values;
  std::vector<LayerShape> shapes;

  std::size_t size() const { return values.size(); }

  std::size_t shape_size() const {
    std::size_t total = 0;
    for (const auto& s : shapes) total += s.size();
    return total;
  }

  bool same_shape(const ParamVector& other) const {
    return shapes == other.shapes && values.size() == other.values.size();
  }

  bool all_finite() const {
    for (double v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

inline ParamVector zeros_like(const ParamVector& proto) {
  ParamVector out;
  out.shapes = proto.shapes;
  out.values.assign(proto.values.size(), 0.0);
  return out;
}

inline void check_same_shape(const ParamVector& a, const ParamVector& b) {
  if (!a.same_shape(b)) throw ShapeError("parameter vectors have mismatched shapes");
}

// dst += w * src, in place.
inline void accumulate_scaled(ParamVector& dst, const ParamVector& src, double w) {
  check_same_shape(dst, src);
  for (std::size_t i = 0; i < dst.values.size(); ++i) dst.values[i] += w * src.values[i];
}

}  // namespace flsim
