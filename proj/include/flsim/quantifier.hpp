#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "flsim/errors.hpp"

namespace flsim {

// Aggregation weights in rank order. Producers guarantee every entry is
// nonnegative and the entries sum to 1 (within 1e-9).
using WeightVector = std::vector<double>;

// Parameters of the piecewise-linear quantifier Q_{a,b,c,y_b}:
//   - ranks in [0, a] contribute nothing,
//   - the top-(a, b] share of ranks receives y_b of the total weight,
//   - ranks in (b, c] share the remaining 1 - y_b,
//   - ranks past c are discarded (Q is already 1 there).
struct QuantifierParams {
  double a = 0.0;
  double b = 0.2;
  double c = 0.8;
  double y_b = 0.75;

  void validate() const {
    if (!(0.0 <= a && a <= b && b <= c && c <= 1.0))
      throw InvalidQuantifierError("quantifier requires 0 <= a <= b <= c <= 1");
    if (!(0.0 <= y_b && y_b <= 1.0))
      throw InvalidQuantifierError("quantifier requires y_b in [0, 1]");
  }

  friend bool operator==(const QuantifierParams&, const QuantifierParams&) = default;
};

// Two-parameter quantifier Q_{a,b}: 0 up to a, linear on [a, b], 1 past b.
//
// Boundary conventions: Q(0) = 0 and Q(1) = 1 always hold, and a degenerate
// segment (a == b) turns into a right-continuous step at that point. Both
// are needed so rank weights Q(i/n) - Q((i-1)/n) stay normalized for every
// admissible parameter choice.
inline double standard_quantifier(double x, double a, double b) {
  if (!(0.0 <= a && a <= b && b <= 1.0))
    throw InvalidQuantifierError("standard quantifier requires 0 <= a <= b <= 1");
  if (x <= 0.0) return 0.0;
  if (x >= b) return 1.0;
  if (x >= a) return (x - a) / (b - a);  // a < b here, the a == b case hit the step above
  return 0.0;
}

// Four-parameter quantifier Q_{a,b,c,y_b}; same boundary conventions as
// standard_quantifier. With y_b = (b-a)/(c-a) the two sloped pieces share
// slope 1/(c-a) and the function reduces to Q_{a,c}.
inline double dynamic_quantifier(double x, const QuantifierParams& p) {
  p.validate();
  if (x <= 0.0) return 0.0;
  if (x >= p.c) return 1.0;
  if (x >= p.b) return (x - p.b) / (p.c - p.b) * (1.0 - p.y_b) + p.y_b;
  if (x >= p.a) return (x - p.a) / (p.b - p.a) * p.y_b;
  return 0.0;
}

// Rank weights w_i = Q(i/n) - Q((i-1)/n) for i = 1..n.
//
// For a monotone quantifier with Q(0)=0 and Q(1)=1 the weights telescope to
// exactly 1; sub-ulp negative differences from the piecewise evaluation are
// clamped to zero.
template <typename Q>
WeightVector weights_from_quantifier(std::size_t n, Q&& quantifier) {
  if (n == 0) throw EmptyAggregationError("cannot build weights for zero participants");
  WeightVector weights(n);
  double prev = quantifier(0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double qi = quantifier(static_cast<double>(i) / static_cast<double>(n));
    weights[i - 1] = std::max(0.0, qi - prev);
    prev = qi;
  }
  return weights;
}

inline WeightVector standard_rank_weights(std::size_t n, double a, double b) {
  return weights_from_quantifier(n, [&](double x) { return standard_quantifier(x, a, b); });
}

inline WeightVector dynamic_rank_weights(std::size_t n, const QuantifierParams& p) {
  p.validate();
  return weights_from_quantifier(n, [&](double x) { return dynamic_quantifier(x, p); });
}

}  // namespace flsim
