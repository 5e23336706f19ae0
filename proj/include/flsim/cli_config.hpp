#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flsim/dataset.hpp"
#include "flsim/errors.hpp"
#include "flsim/federation.hpp"
#include "flsim/idx_io.hpp"
#include "flsim/metrics_io.hpp"
#include "flsim/rng.hpp"

namespace flsim {

// Everything a CLI invocation can set. Unset fields fall back to the
// defaults in resolve_options; a config file fills fields the flags left
// unset (flags win).
struct Options {
  std::optional<std::string> scenario;  // ad | non-ad | high-ad
  std::optional<std::size_t> clients;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> runs;
  std::optional<std::string> aggregator;  // fedavg | wfedavg | al80 | iowa-sq | iowa-dq
  std::optional<double> yb;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> c;
  std::optional<std::string> wfedavg_mode;  // as-written | normalized
  std::optional<std::string> poison_mode;   // shuffle | class-map
  std::optional<double> adversarial_fraction;
  std::optional<std::string> dataset;  // synthetic | idx
  std::optional<std::string> idx_images;
  std::optional<std::string> idx_labels;
  std::optional<std::size_t> labels_per_client;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::string> format;  // csv | json
  std::optional<int> synthetic_classes;
  std::optional<std::size_t> synthetic_dim;
  std::optional<std::size_t> samples_per_class;
  std::optional<double> spread;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> hidden_dims;  // comma-separated layer sizes
  std::optional<double> validation_fraction;
  std::optional<double> test_fraction;
  std::optional<bool> parallel;
};

struct ResolvedRun {
  FederationConfig fed;
  std::size_t runs = 10;
  std::string aggregator_label;
  std::string output = "-";
  MetricsFormat format = MetricsFormat::Csv;
  bool synthetic = true;
  int synthetic_classes = 10;
  std::size_t synthetic_dim = 10;
  std::size_t samples_per_class = 200;
  double spread = 1.0;
  std::string idx_images;
  std::string idx_labels;
  double validation_fraction = 0.15;
  double test_fraction = 0.15;
  std::map<std::string, std::string> echo;  // effective configuration, by flag name
};

namespace detail {

inline double parse_double_value(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value for " + key + ": " + value);
  }
}

inline std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer value for " + key + ": " + value);
  }
}

inline bool parse_bool_value(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("invalid boolean value for " + key + ": " + value);
}

inline std::vector<std::size_t> parse_hidden_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  if (text.empty()) return dims;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) throw ConfigError("invalid hidden-dims list: " + text);
    dims.push_back(static_cast<std::size_t>(parse_u64_value("hidden-dims", token)));
    if (dims.back() == 0) throw ConfigError("hidden layer sizes must be positive");
  }
  return dims;
}

inline void apply_config_entry(Options& opts, const std::string& key, const std::string& value) {
  if (key == "scenario") opts.scenario = value;
  else if (key == "clients") opts.clients = parse_u64_value(key, value);
  else if (key == "rounds") opts.rounds = parse_u64_value(key, value);
  else if (key == "epochs") opts.epochs = parse_u64_value(key, value);
  else if (key == "runs") opts.runs = parse_u64_value(key, value);
  else if (key == "aggregator") opts.aggregator = value;
  else if (key == "yb") opts.yb = parse_double_value(key, value);
  else if (key == "a") opts.a = parse_double_value(key, value);
  else if (key == "b") opts.b = parse_double_value(key, value);
  else if (key == "c") opts.c = parse_double_value(key, value);
  else if (key == "wfedavg-mode") opts.wfedavg_mode = value;
  else if (key == "poison-mode") opts.poison_mode = value;
  else if (key == "adversarial-fraction") opts.adversarial_fraction = parse_double_value(key, value);
  else if (key == "dataset") opts.dataset = value;
  else if (key == "idx-images") opts.idx_images = value;
  else if (key == "idx-labels") opts.idx_labels = value;
  else if (key == "labels-per-client") opts.labels_per_client = parse_u64_value(key, value);
  else if (key == "seed") opts.seed = parse_u64_value(key, value);
  else if (key == "output") opts.output = value;
  else if (key == "format") opts.format = value;
  else if (key == "synthetic-classes") opts.synthetic_classes = static_cast<int>(parse_u64_value(key, value));
  else if (key == "synthetic-dim") opts.synthetic_dim = parse_u64_value(key, value);
  else if (key == "samples-per-class") opts.samples_per_class = parse_u64_value(key, value);
  else if (key == "spread") opts.spread = parse_double_value(key, value);
  else if (key == "learning-rate") opts.learning_rate = parse_double_value(key, value);
  else if (key == "batch-size") opts.batch_size = parse_u64_value(key, value);
  else if (key == "hidden-dims") opts.hidden_dims = value;
  else if (key == "validation-fraction") opts.validation_fraction = parse_double_value(key, value);
  else if (key == "test-fraction") opts.test_fraction = parse_double_value(key, value);
  else if (key == "parallel") opts.parallel = parse_bool_value(key, value);
  else throw ConfigError("unknown configuration key: " + key);
}

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace detail

// Flat key=value configuration file mirroring the flag names. '#' starts a
// comment line; unknown keys are errors.
inline Options parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Options opts;
  std::string line;
  while (std::getline(in, line)) {
    const std::string text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("config line is not key=value: " + text);
    detail::apply_config_entry(opts, detail::trim(text.substr(0, eq)),
                               detail::trim(text.substr(eq + 1)));
  }
  return opts;
}

// Fields set in `overrides` replace fields in `base`.
inline Options merge_options(Options base, const Options& overrides) {
  auto take = [](auto& dst, const auto& src) {
    if (src.has_value()) dst = src;
  };
  take(base.scenario, overrides.scenario);
  take(base.clients, overrides.clients);
  take(base.rounds, overrides.rounds);
  take(base.epochs, overrides.epochs);
  take(base.runs, overrides.runs);
  take(base.aggregator, overrides.aggregator);
  take(base.yb, overrides.yb);
  take(base.a, overrides.a);
  take(base.b, overrides.b);
  take(base.c, overrides.c);
  take(base.wfedavg_mode, overrides.wfedavg_mode);
  take(base.poison_mode, overrides.poison_mode);
  take(base.adversarial_fraction, overrides.adversarial_fraction);
  take(base.dataset, overrides.dataset);
  take(base.idx_images, overrides.idx_images);
  take(base.idx_labels, overrides.idx_labels);
  take(base.labels_per_client, overrides.labels_per_client);
  take(base.seed, overrides.seed);
  take(base.output, overrides.output);
  take(base.format, overrides.format);
  take(base.synthetic_classes, overrides.synthetic_classes);
  take(base.synthetic_dim, overrides.synthetic_dim);
  take(base.samples_per_class, overrides.samples_per_class);
  take(base.spread, overrides.spread);
  take(base.learning_rate, overrides.learning_rate);
  take(base.batch_size, overrides.batch_size);
  take(base.hidden_dims, overrides.hidden_dims);
  take(base.validation_fraction, overrides.validation_fraction);
  take(base.test_fraction, overrides.test_fraction);
  take(base.parallel, overrides.parallel);
  return base;
}

// Scenario presets fix the adversarial fraction; an explicit
// --adversarial-fraction still overrides.
inline double scenario_fraction(const std::string& scenario) {
  if (scenario == "ad") return 0.10;
  if (scenario == "non-ad") return 0.0;
  if (scenario == "high-ad") return 0.30;
  throw ConfigError("unknown scenario: " + scenario + " (expected ad, non-ad or high-ad)");
}

inline ResolvedRun resolve_options(const Options& opts) {
  ResolvedRun run;
  const std::string scenario = opts.scenario.value_or("non-ad");
  run.fed.adversarial_fraction = opts.adversarial_fraction.value_or(scenario_fraction(scenario));
  if (!(run.fed.adversarial_fraction >= 0.0 && run.fed.adversarial_fraction < 1.0))
    throw ConfigError("adversarial-fraction must lie in [0, 1)");

  run.fed.n_clients = opts.clients.value_or(20);
  run.fed.rounds = opts.rounds.value_or(10);
  run.fed.epochs_per_round = opts.epochs.value_or(5);
  run.runs = opts.runs.value_or(10);
  if (run.fed.n_clients < 1 || run.fed.rounds < 1 || run.fed.epochs_per_round < 1 || run.runs < 1)
    throw ConfigError("clients, rounds, epochs and runs must all be >= 1");

  const std::string aggregator = opts.aggregator.value_or("iowa-dq");
  run.aggregator_label = aggregator;
  if (aggregator == "fedavg") run.fed.aggregator.kind = AggregatorKind::FedAvg;
  else if (aggregator == "wfedavg") run.fed.aggregator.kind = AggregatorKind::WFedAvg;
  else if (aggregator == "al80") run.fed.aggregator.kind = AggregatorKind::Al80;
  else if (aggregator == "iowa-sq") run.fed.aggregator.kind = AggregatorKind::IowaSq;
  else if (aggregator == "iowa-dq") run.fed.aggregator.kind = AggregatorKind::IowaDq;
  else throw ConfigError("unknown aggregator: " + aggregator);

  run.fed.aggregator.a = opts.a.value_or(0.0);
  run.fed.aggregator.b = opts.b.value_or(0.2);
  run.fed.aggregator.c = opts.c.value_or(0.8);
  run.fed.aggregator.y_b = opts.yb.value_or(0.75);
  const auto& agg = run.fed.aggregator;
  if (!(0.0 <= agg.a && agg.a <= agg.b && agg.b <= 1.0) || !(agg.c >= 0.0 && agg.c <= 1.0) ||
      !(agg.y_b >= 0.0 && agg.y_b <= 1.0))
    throw ConfigError("quantifier parameters must satisfy 0 <= a <= b <= 1, c in [0,1], "
                      "yb in [0,1]");
  if (run.fed.aggregator.kind == AggregatorKind::IowaSq && agg.b > agg.c)
    throw ConfigError("static quantifier requires b <= c");

  const std::string wmode = opts.wfedavg_mode.value_or("normalized");
  if (wmode == "normalized") run.fed.aggregator.wfedavg_mode = WFedAvgMode::Normalized;
  else if (wmode == "as-written") run.fed.aggregator.wfedavg_mode = WFedAvgMode::AsWritten;
  else throw ConfigError("unknown wfedavg-mode: " + wmode);

  const std::string pmode = opts.poison_mode.value_or("shuffle");
  if (pmode == "shuffle") run.fed.poison_mode = PoisonMode::Shuffle;
  else if (pmode == "class-map") run.fed.poison_mode = PoisonMode::ClassMap;
  else throw ConfigError("unknown poison-mode: " + pmode);

  const std::string dataset = opts.dataset.value_or("synthetic");
  if (dataset == "synthetic") run.synthetic = true;
  else if (dataset == "idx") run.synthetic = false;
  else throw ConfigError("unknown dataset: " + dataset);
  if (!run.synthetic) {
    if (!opts.idx_images.has_value() || !opts.idx_labels.has_value())
      throw ConfigError("dataset idx requires --idx-images and --idx-labels");
    run.idx_images = *opts.idx_images;
    run.idx_labels = *opts.idx_labels;
  }

  run.synthetic_classes = opts.synthetic_classes.value_or(10);
  run.synthetic_dim = opts.synthetic_dim.value_or(10);
  run.samples_per_class = opts.samples_per_class.value_or(200);
  run.spread = opts.spread.value_or(1.0);
  if (run.synthetic_classes < 2 || run.synthetic_dim < 2 || run.samples_per_class < 1 ||
      run.spread < 0.0)
    throw ConfigError("synthetic dataset needs classes >= 2, dim >= 2, samples >= 1, "
                      "spread >= 0");

  run.fed.partition_plan.labels_per_client = opts.labels_per_client.value_or(2);
  if (run.fed.partition_plan.labels_per_client < 1)
    throw ConfigError("labels-per-client must be >= 1");

  run.fed.master_seed = opts.seed.value_or(42);
  run.fed.train_config.learning_rate = opts.learning_rate.value_or(0.05);
  run.fed.train_config.batch_size = opts.batch_size.value_or(32);
  if (!(run.fed.train_config.learning_rate > 0.0))
    throw ConfigError("learning-rate must be positive");
  if (run.fed.train_config.batch_size < 1) throw ConfigError("batch-size must be >= 1");
  run.fed.model_spec.hidden_dims = detail::parse_hidden_dims(opts.hidden_dims.value_or(""));

  run.validation_fraction = opts.validation_fraction.value_or(0.15);
  run.test_fraction = opts.test_fraction.value_or(0.15);
  if (!(run.validation_fraction > 0.0 && run.validation_fraction < 1.0) ||
      !(run.test_fraction > 0.0 && run.test_fraction < 1.0))
    throw ConfigError("validation-fraction and test-fraction must lie in (0, 1)");

  run.fed.parallel_clients = opts.parallel.value_or(true);
  run.output = opts.output.value_or("-");
  const std::string format = opts.format.value_or("csv");
  if (format == "csv") run.format = MetricsFormat::Csv;
  else if (format == "json") run.format = MetricsFormat::Json;
  else throw ConfigError("unknown format: " + format);

  run.echo = {
      {"scenario", scenario},
      {"clients", std::to_string(run.fed.n_clients)},
      {"rounds", std::to_string(run.fed.rounds)},
      {"epochs", std::to_string(run.fed.epochs_per_round)},
      {"runs", std::to_string(run.runs)},
      {"aggregator", run.aggregator_label},
      {"a", format_double(agg.a)},
      {"b", format_double(agg.b)},
      {"c", format_double(agg.c)},
      {"yb", format_double(agg.y_b)},
      {"wfedavg-mode", wmode},
      {"poison-mode", pmode},
      {"adversarial-fraction", format_double(run.fed.adversarial_fraction)},
      {"dataset", dataset},
      {"idx-images", run.idx_images},
      {"idx-labels", run.idx_labels},
      {"labels-per-client", std::to_string(run.fed.partition_plan.labels_per_client)},
      {"seed", std::to_string(run.fed.master_seed)},
      {"output", run.output},
      {"format", format},
      {"synthetic-classes", std::to_string(run.synthetic_classes)},
      {"synthetic-dim", std::to_string(run.synthetic_dim)},
      {"samples-per-class", std::to_string(run.samples_per_class)},
      {"spread", format_double(run.spread)},
      {"learning-rate", format_double(run.fed.train_config.learning_rate)},
      {"batch-size", std::to_string(run.fed.train_config.batch_size)},
      {"hidden-dims", opts.hidden_dims.value_or("")},
      {"validation-fraction", format_double(run.validation_fraction)},
      {"test-fraction", format_double(run.test_fraction)},
      {"parallel", run.fed.parallel_clients ? "on" : "off"},
  };
  return run;
}

namespace detail {

inline constexpr std::uint64_t kDataTag = 0x444154ULL;
inline constexpr std::uint64_t kTestSplitTag = 0x545354ULL;
inline constexpr std::uint64_t kValSplitTag = 0x56414cULL;

}  // namespace detail

// Builds the train/validation/test triple and completes the model spec from
// the data. The test split is carved from the full dataset first, then the
// validation split from the remainder.
inline ScenarioData prepare_data(ResolvedRun& run) {
  Dataset full;
  if (run.synthetic) {
    full = generate_synthetic(run.synthetic_classes, run.synthetic_dim, run.samples_per_class,
                              run.spread, mix_seed({run.fed.master_seed, detail::kDataTag}));
  } else {
    full = load_idx(run.idx_images, run.idx_labels);
  }
  auto [rest, test] =
      split_validation(full, run.test_fraction, mix_seed({run.fed.master_seed, detail::kTestSplitTag}));
  auto [train, validation] =
      split_validation(rest, run.validation_fraction,
                       mix_seed({run.fed.master_seed, detail::kValSplitTag}));

  run.fed.model_spec.input_dim = full.dim;
  run.fed.model_spec.num_classes = full.max_label() + 1;
  if (run.fed.model_spec.num_classes < 2)
    throw ConfigError("dataset must contain at least two classes");

  ScenarioData data;
  data.train = std::move(train);
  data.validation = std::move(validation);
  data.test = std::move(test);
  return data;
}

}  // namespace flsim
