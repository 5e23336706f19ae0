#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "flsim/dataset.hpp"
#include "flsim/errors.hpp"
#include "flsim/model.hpp"
#include "flsim/owa.hpp"
#include "flsim/param_vector.hpp"
#include "flsim/quantifier.hpp"

namespace flsim {

// A weight below this is "discarded": the client contributed nothing beyond
// floating-point residue.
inline constexpr double kDiscardEpsilon = 1e-12;

// One client's upload for a round: trained parameters, local sample count,
// and the server-side validation accuracy once measured.
struct ClientUpdate {
  int client_id = 0;
  ParamVector params;
  std::size_t num_samples = 1;
  std::optional<double> accuracy;
};

// Per-aggregation record of who got which weight and who was discarded.
// client_ids is sorted ascending and aligned with weights.
struct AggregationReport {
  std::vector<int> client_ids;
  WeightVector weights;
  std::optional<double> c_used;
  std::optional<double> b_effective;
  std::set<int> discarded_ids;

  double weight_of(int client_id) const {
    for (std::size_t i = 0; i < client_ids.size(); ++i)
      if (client_ids[i] == client_id) return weights[i];
    throw std::invalid_argument("unknown client id in aggregation report");
  }

  friend bool operator==(const AggregationReport&, const AggregationReport&) = default;
};

// Local accuracy function: validation accuracy of an uploaded model,
// evaluated server-side on the shared validation set. This is the
// order-inducing value for the IOWA operators.
inline double f_la(const ParamVector& params, const Dataset& validation, const ModelSpec& spec) {
  if (validation.empty()) throw EmptyValidationError("validation set is empty");
  return evaluate_accuracy(params, spec, validation);
}

// Permutation of positions in `updates`, sorted by accuracy descending with
// ties broken by ascending client_id.
inline std::vector<std::size_t> order_by_accuracy(const std::vector<ClientUpdate>& updates) {
  for (const auto& u : updates)
    if (!u.accuracy.has_value())
      throw MissingAccuracyError("every client update needs a measured accuracy");
  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
    if (*updates[lhs].accuracy != *updates[rhs].accuracy)
      return *updates[lhs].accuracy > *updates[rhs].accuracy;
    return updates[lhs].client_id < updates[rhs].client_id;
  });
  return order;
}

// Retained-client portion c: the share of clients whose accuracy gap to the
// best client is at most 3/4 of the maximum pairwise gap. For sorted scalars
// the maximum pairwise gap is first minus last.
inline double compute_dynamic_c(const std::vector<double>& sorted_accuracies) {
  if (sorted_accuracies.empty())
    throw EmptyAggregationError("cannot compute the retained portion of zero clients");
  for (std::size_t i = 1; i < sorted_accuracies.size(); ++i)
    if (sorted_accuracies[i] > sorted_accuracies[i - 1])
      throw std::invalid_argument("accuracies must be sorted non-increasing");
  const double top = sorted_accuracies.front();
  const double threshold = 0.75 * (top - sorted_accuracies.back());
  std::size_t kept = 0;
  for (double u : sorted_accuracies)
    if (top - u <= threshold) ++kept;
  return static_cast<double>(kept) / static_cast<double>(sorted_accuracies.size());
}

namespace detail {

inline void check_non_empty_updates(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw EmptyAggregationError("cannot aggregate zero client updates");
}

inline void check_update_shapes(const std::vector<ClientUpdate>& updates) {
  for (const auto& u : updates) check_same_shape(updates.front().params, u.params);
}

// Weighted sum of the updates in the given rank order, plus the report that
// maps rank weights back to client ids.
inline std::pair<ParamVector, AggregationReport> aggregate_ranked(
    const std::vector<ClientUpdate>& updates, const std::vector<std::size_t>& order,
    const WeightVector& rank_weights) {
  ParamVector out = zeros_like(updates.front().params);
  std::vector<std::pair<int, double>> by_client;
  by_client.reserve(updates.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    accumulate_scaled(out, updates[order[rank]].params, rank_weights[rank]);
    by_client.emplace_back(updates[order[rank]].client_id, rank_weights[rank]);
  }
  std::sort(by_client.begin(), by_client.end());
  AggregationReport report;
  for (const auto& [id, w] : by_client) {
    report.client_ids.push_back(id);
    report.weights.push_back(w);
    if (w < kDiscardEpsilon) report.discarded_ids.insert(id);
  }
  return {std::move(out), std::move(report)};
}

}  // namespace detail

// Plain average of the local parameters.
inline ParamVector fed_avg(const std::vector<ClientUpdate>& updates) {
  detail::check_non_empty_updates(updates);
  detail::check_update_shapes(updates);
  ParamVector out = zeros_like(updates.front().params);
  const double w = 1.0 / static_cast<double>(updates.size());
  for (const auto& u : updates) accumulate_scaled(out, u.params, w);
  return out;
}

enum class WFedAvgMode {
  AsWritten,   // sum_i params_i / n_i, exactly as printed
  Normalized,  // sum_i (n_i / sum_j n_j) * params_i
};

// Sample-count-weighted average. The as-written form divides each client by
// its own sample count without normalizing (it is not a convex combination);
// the normalized form is the standard proportional weighting. Both are kept
// so the discrepancy stays observable.
inline ParamVector w_fed_avg(const std::vector<ClientUpdate>& updates, WFedAvgMode mode) {
  detail::check_non_empty_updates(updates);
  detail::check_update_shapes(updates);
  for (const auto& u : updates)
    if (u.num_samples < 1) throw std::invalid_argument("every client needs num_samples >= 1");
  ParamVector out = zeros_like(updates.front().params);
  if (mode == WFedAvgMode::AsWritten) {
    for (const auto& u : updates)
      accumulate_scaled(out, u.params, 1.0 / static_cast<double>(u.num_samples));
    return out;
  }
  double total = 0.0;
  for (const auto& u : updates) total += static_cast<double>(u.num_samples);
  for (const auto& u : updates)
    accumulate_scaled(out, u.params, static_cast<double>(u.num_samples) / total);
  return out;
}

// "At least 80%": rank weights from Q_{0,0.8} applied in accuracy order.
inline std::pair<ParamVector, AggregationReport> al80(const std::vector<ClientUpdate>& updates) {
  detail::check_non_empty_updates(updates);
  detail::check_update_shapes(updates);
  const auto order = order_by_accuracy(updates);
  const auto weights = standard_rank_weights(updates.size(), 0.0, 0.8);
  return detail::aggregate_ranked(updates, order, weights);
}

// Static-quantifier IOWA: rank weights from a fixed Q_{a,b,c,y_b}.
inline std::pair<ParamVector, AggregationReport> iowa_sq(const std::vector<ClientUpdate>& updates,
                                                         const QuantifierParams& params) {
  detail::check_non_empty_updates(updates);
  detail::check_update_shapes(updates);
  params.validate();
  const auto order = order_by_accuracy(updates);
  const auto weights = dynamic_rank_weights(updates.size(), params);
  auto [aggregated, report] = detail::aggregate_ranked(updates, order, weights);
  report.c_used = params.c;
  return {std::move(aggregated), std::move(report)};
}

// Dynamic-quantifier IOWA with the retained portion c forced to a known
// value; b is rescaled to b' = b * c before building the quantifier.
inline std::pair<ParamVector, AggregationReport> iowa_dq_with_c(
    const std::vector<ClientUpdate>& updates, double a, double b, double y_b, double c) {
  detail::check_non_empty_updates(updates);
  detail::check_update_shapes(updates);
  if (!(0.0 <= a && a <= b && b <= 1.0))
    throw InvalidQuantifierError("iowa_dq requires 0 <= a <= b <= 1");
  if (!(0.0 <= y_b && y_b <= 1.0)) throw InvalidQuantifierError("iowa_dq requires y_b in [0, 1]");
  const double b_effective = b * c;
  if (b_effective < a)
    throw InvalidQuantifierError("scaled b' = b*c fell below a; quantifier is invalid");
  const QuantifierParams q{a, b_effective, c, y_b};
  q.validate();
  const auto order = order_by_accuracy(updates);
  const auto weights = dynamic_rank_weights(updates.size(), q);
  auto [aggregated, report] = detail::aggregate_ranked(updates, order, weights);
  report.c_used = c;
  report.b_effective = b_effective;
  return {std::move(aggregated), std::move(report)};
}

// Dynamic-quantifier IOWA: computes the retained portion c from the sorted
// accuracies each time it runs, then aggregates with Q_{a, b*c, c, y_b}.
inline std::pair<ParamVector, AggregationReport> iowa_dq(const std::vector<ClientUpdate>& updates,
                                                         double a, double b, double y_b) {
  detail::check_non_empty_updates(updates);
  const auto order = order_by_accuracy(updates);
  std::vector<double> sorted_accuracies;
  sorted_accuracies.reserve(updates.size());
  for (std::size_t pos : order) sorted_accuracies.push_back(*updates[pos].accuracy);
  const double c = compute_dynamic_c(sorted_accuracies);
  return iowa_dq_with_c(updates, a, b, y_b, c);
}

}  // namespace flsim
