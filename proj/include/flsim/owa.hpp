#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "flsim/errors.hpp"
#include "flsim/param_vector.hpp"
#include "flsim/quantifier.hpp"

namespace flsim {

// Rank order induced by a vector of inducing values: descending value,
// ties by ascending input index. The tie-break makes the permutation total,
// so repeated runs aggregate in identical order.
inline std::vector<std::size_t> induced_order(const std::vector<double>& inducers) {
  std::vector<std::size_t> order(inducers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t lhs, std::size_t rhs) { return inducers[lhs] > inducers[rhs]; });
  return order;
}

// Induced ordered weighted average: sorts the pairs by their inducing value
// (descending) and returns sum_i weights[i] * value_{sigma(i)}. Accumulation
// runs in rank order, so identical inputs produce identical bits.
inline ParamVector iowa_aggregate(const std::vector<std::pair<double, ParamVector>>& pairs,
                                  const WeightVector& weights) {
  if (pairs.empty()) throw EmptyAggregationError("iowa_aggregate needs at least one pair");
  if (pairs.size() != weights.size())
    throw ArityError("iowa_aggregate: pair count and weight count differ");
  for (const auto& [u, v] : pairs) check_same_shape(pairs.front().second, v);

  std::vector<double> inducers;
  inducers.reserve(pairs.size());
  for (const auto& [u, v] : pairs) inducers.push_back(u);
  const auto order = induced_order(inducers);

  ParamVector out = zeros_like(pairs.front().second);
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    accumulate_scaled(out, pairs[order[rank]].second, weights[rank]);
  return out;
}

}  // namespace flsim
