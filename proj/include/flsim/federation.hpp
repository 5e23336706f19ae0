#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <future>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flsim/aggregation.hpp"
#include "flsim/dataset.hpp"
#include "flsim/errors.hpp"
#include "flsim/model.hpp"
#include "flsim/rng.hpp"

namespace flsim {

enum class AggregatorKind { FedAvg, WFedAvg, Al80, IowaSq, IowaDq };

inline std::string aggregator_name(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::FedAvg: return "fedavg";
    case AggregatorKind::WFedAvg: return "wfedavg";
    case AggregatorKind::Al80: return "al80";
    case AggregatorKind::IowaSq: return "iowa-sq";
    case AggregatorKind::IowaDq: return "iowa-dq";
  }
  return "unknown";
}

struct AggregatorConfig {
  AggregatorKind kind = AggregatorKind::IowaDq;
  double a = 0.0;
  double b = 0.2;
  double c = 0.8;  // static quantifier only; the dynamic operator computes its own
  double y_b = 0.75;
  WFedAvgMode wfedavg_mode = WFedAvgMode::Normalized;
};

struct FederationConfig {
  std::size_t n_clients = 20;
  std::size_t rounds = 10;
  std::size_t epochs_per_round = 5;
  double adversarial_fraction = 0.0;
  PoisonMode poison_mode = PoisonMode::Shuffle;
  AggregatorConfig aggregator;
  ModelSpec model_spec;
  TrainConfig train_config;  // epochs field is superseded by epochs_per_round
  PartitionPlan partition_plan;  // seed is re-derived per run
  std::uint64_t master_seed = 42;
  bool parallel_clients = true;

  std::size_t adversary_count() const {
    return static_cast<std::size_t>(adversarial_fraction * static_cast<double>(n_clients));
  }

  void validate() const {
    if (n_clients < 1 || rounds < 1 || epochs_per_round < 1)
      throw std::invalid_argument("federation needs n_clients, rounds, epochs >= 1");
    if (!(adversarial_fraction >= 0.0 && adversarial_fraction < 1.0))
      throw std::invalid_argument("adversarial fraction must lie in [0, 1)");
    if (adversary_count() >= n_clients)
      throw std::invalid_argument("adversaries must leave at least one benign client");
    model_spec.validate();
    train_config.validate();
  }
};

// One round's record: global test accuracy, the per-client validation
// accuracies that induced the order, and the weight/discard outcome.
struct RoundMetrics {
  int round_index = 0;  // 1-based
  double global_accuracy = 0.0;
  std::vector<double> per_client_accuracy;  // indexed by client id
  std::optional<double> c_used;
  WeightVector weights;  // indexed by client id
  std::set<int> discarded_ids;
  int adversarial_discarded = 0;
  int benign_discarded = 0;

  friend bool operator==(const RoundMetrics&, const RoundMetrics&) = default;
};

struct RunSeries {
  int run_index = 0;
  std::set<int> adversarial_ids;
  std::vector<RoundMetrics> rounds;

  friend bool operator==(const RunSeries&, const RunSeries&) = default;
};

struct ScenarioResult {
  std::vector<RunSeries> runs;
  std::vector<double> mean_global_accuracy;  // per round, averaged over runs

  friend bool operator==(const ScenarioResult&, const ScenarioResult&) = default;
};

struct ScenarioData {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// State of one run: partitioned (and possibly poisoned) client data, the
// global parameters, and the per-client copies kept in sync by broadcast.
struct FederationState {
  FederationConfig cfg;
  Dataset validation;
  Dataset test;
  std::vector<Dataset> client_data;
  std::set<int> adversarial_ids;
  ParamVector global;
  std::vector<ParamVector> client_params;
  int run_index = 0;
  int next_round = 1;
};

namespace detail {

inline constexpr std::uint64_t kRunTag = 0x52554eULL;
inline constexpr std::uint64_t kPartitionTag = 0x504152ULL;
inline constexpr std::uint64_t kAdversaryTag = 0x414456ULL;
inline constexpr std::uint64_t kPoisonTag = 0x504f49ULL;
inline constexpr std::uint64_t kInitTag = 0x4d4f44ULL;
inline constexpr std::uint64_t kTrainTag = 0x545249ULL;

// Report for the operators that do not produce one themselves.
inline AggregationReport uniform_style_report(const std::vector<ClientUpdate>& updates,
                                              const AggregatorConfig& agg) {
  AggregationReport report;
  std::vector<std::pair<int, double>> by_client;
  double total_samples = 0.0;
  for (const auto& u : updates) total_samples += static_cast<double>(u.num_samples);
  for (const auto& u : updates) {
    double w = 1.0 / static_cast<double>(updates.size());
    if (agg.kind == AggregatorKind::WFedAvg) {
      w = agg.wfedavg_mode == WFedAvgMode::Normalized
              ? static_cast<double>(u.num_samples) / total_samples
              : 1.0 / static_cast<double>(u.num_samples);
    }
    by_client.emplace_back(u.client_id, w);
  }
  std::sort(by_client.begin(), by_client.end());
  for (const auto& [id, w] : by_client) {
    report.client_ids.push_back(id);
    report.weights.push_back(w);
    if (w < kDiscardEpsilon) report.discarded_ids.insert(id);
  }
  return report;
}

inline std::pair<ParamVector, AggregationReport> aggregate(
    const std::vector<ClientUpdate>& updates, const AggregatorConfig& agg) {
  switch (agg.kind) {
    case AggregatorKind::FedAvg:
      return {fed_avg(updates), uniform_style_report(updates, agg)};
    case AggregatorKind::WFedAvg:
      return {w_fed_avg(updates, agg.wfedavg_mode), uniform_style_report(updates, agg)};
    case AggregatorKind::Al80:
      return al80(updates);
    case AggregatorKind::IowaSq:
      return iowa_sq(updates, QuantifierParams{agg.a, agg.b, agg.c, agg.y_b});
    case AggregatorKind::IowaDq:
      return iowa_dq(updates, agg.a, agg.b, agg.y_b);
  }
  throw std::invalid_argument("unknown aggregator kind");
}

}  // namespace detail

// Sets up one run: per-run partition, seeded adversary placement, one-time
// label poisoning, and the initial global model.
inline FederationState init_run(const FederationConfig& cfg, const ScenarioData& data,
                                int run_index) {
  cfg.validate();
  if (data.validation.empty()) throw EmptyValidationError("scenario needs a validation set");
  if (data.test.empty()) throw EmptyDataError("scenario needs a test set");

  FederationState state;
  state.cfg = cfg;
  state.validation = data.validation;
  state.test = data.test;
  state.run_index = run_index;

  const std::uint64_t run_seed =
      mix_seed({cfg.master_seed, detail::kRunTag, static_cast<std::uint64_t>(run_index)});

  PartitionPlan plan = cfg.partition_plan;
  plan.n_clients = cfg.n_clients;
  plan.seed = mix_seed({run_seed, detail::kPartitionTag});
  state.client_data = partition_non_iid(data.train, plan);

  std::vector<int> ids(cfg.n_clients);
  std::iota(ids.begin(), ids.end(), 0);
  auto rng = make_rng(mix_seed({run_seed, detail::kAdversaryTag}));
  std::shuffle(ids.begin(), ids.end(), rng);
  for (std::size_t i = 0; i < cfg.adversary_count(); ++i) state.adversarial_ids.insert(ids[i]);

  for (int id : state.adversarial_ids) {
    const auto client = static_cast<std::size_t>(id);
    state.client_data[client] = poison_labels(
        state.client_data[client], cfg.poison_mode,
        mix_seed({run_seed, detail::kPoisonTag, static_cast<std::uint64_t>(id)}));
  }

  state.global = init_model(cfg.model_spec, mix_seed({run_seed, detail::kInitTag}));
  state.client_params.assign(cfg.n_clients, state.global);
  return state;
}

// One round of learning: every client trains from the current global
// parameters on its local data, the server scores each upload on the
// validation set, the configured operator aggregates, and the new global
// parameters are broadcast back. Client training is schedule-independent:
// each client's seed depends only on (master, run, client, round).
inline RoundMetrics run_round(FederationState& state) {
  const auto& cfg = state.cfg;
  const int round = state.next_round;
  try {
    std::vector<ParamVector> trained(cfg.n_clients);
    auto train_one = [&](std::size_t client) {
      TrainConfig tc = cfg.train_config;
      tc.epochs = cfg.epochs_per_round;
      tc.seed = mix_seed({cfg.master_seed, detail::kTrainTag,
                          static_cast<std::uint64_t>(state.run_index),
                          static_cast<std::uint64_t>(client),
                          static_cast<std::uint64_t>(round)});
      return train_local(state.client_params[client], cfg.model_spec,
                         state.client_data[client], tc);
    };
    if (cfg.parallel_clients) {
      std::vector<std::future<ParamVector>> futures;
      futures.reserve(cfg.n_clients);
      for (std::size_t client = 0; client < cfg.n_clients; ++client)
        futures.push_back(std::async(std::launch::async, train_one, client));
      for (std::size_t client = 0; client < cfg.n_clients; ++client)
        trained[client] = futures[client].get();
    } else {
      for (std::size_t client = 0; client < cfg.n_clients; ++client)
        trained[client] = train_one(client);
    }

    std::vector<ClientUpdate> updates;
    updates.reserve(cfg.n_clients);
    for (std::size_t client = 0; client < cfg.n_clients; ++client) {
      ClientUpdate u;
      u.client_id = static_cast<int>(client);
      u.params = std::move(trained[client]);
      u.num_samples = state.client_data[client].n();
      u.accuracy = f_la(u.params, state.validation, cfg.model_spec);
      updates.push_back(std::move(u));
    }

    auto [aggregated, report] = detail::aggregate(updates, cfg.aggregator);
    state.global = std::move(aggregated);
    for (auto& params : state.client_params) params = state.global;  // broadcast

    RoundMetrics metrics;
    metrics.round_index = round;
    metrics.global_accuracy = evaluate_accuracy(state.global, cfg.model_spec, state.test);
    metrics.per_client_accuracy.resize(cfg.n_clients);
    for (const auto& u : updates)
      metrics.per_client_accuracy[static_cast<std::size_t>(u.client_id)] = *u.accuracy;
    metrics.c_used = report.c_used;
    metrics.weights = report.weights;  // client_ids are 0..n-1, already aligned
    metrics.discarded_ids = report.discarded_ids;
    for (int id : metrics.discarded_ids) {
      if (state.adversarial_ids.count(id))
        ++metrics.adversarial_discarded;
      else
        ++metrics.benign_discarded;
    }
    state.next_round = round + 1;
    return metrics;
  } catch (...) {
    std::throw_with_nested(RoundError("round " + std::to_string(round) + " failed"));
  }
}

// Executes `runs` independent repetitions with seeds derived from the master
// seed, returning every raw series plus the per-round mean global accuracy.
inline ScenarioResult run_scenario(const FederationConfig& cfg, const ScenarioData& data,
                                   std::size_t runs) {
  if (runs < 1) throw std::invalid_argument("need at least one run");
  ScenarioResult result;
  result.runs.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    FederationState state = init_run(cfg, data, static_cast<int>(r));
    RunSeries series;
    series.run_index = static_cast<int>(r);
    series.adversarial_ids = state.adversarial_ids;
    series.rounds.reserve(cfg.rounds);
    for (std::size_t t = 0; t < cfg.rounds; ++t) series.rounds.push_back(run_round(state));
    result.runs.push_back(std::move(series));
  }
  result.mean_global_accuracy.assign(cfg.rounds, 0.0);
  for (const auto& series : result.runs)
    for (std::size_t t = 0; t < cfg.rounds; ++t)
      result.mean_global_accuracy[t] += series.rounds[t].global_accuracy;
  for (auto& acc : result.mean_global_accuracy) acc /= static_cast<double>(runs);
  return result;
}

// Per-round discarding precision/recall against the known adversary set.
// Precision is 1 when nothing was discarded; recall is 1 when there are no
// adversaries.
inline std::vector<std::pair<double, double>> detection_report(
    const std::vector<RoundMetrics>& rounds, const std::set<int>& true_adversarial) {
  std::vector<std::pair<double, double>> out;
  out.reserve(rounds.size());
  for (const auto& m : rounds) {
    int hits = 0;
    for (int id : m.discarded_ids)
      if (true_adversarial.count(id)) ++hits;
    const double precision =
        m.discarded_ids.empty() ? 1.0
                                : static_cast<double>(hits) /
                                      static_cast<double>(m.discarded_ids.size());
    const double recall = true_adversarial.empty()
                              ? 1.0
                              : static_cast<double>(hits) /
                                    static_cast<double>(true_adversarial.size());
    out.emplace_back(precision, recall);
  }
  return out;
}

}  // namespace flsim
