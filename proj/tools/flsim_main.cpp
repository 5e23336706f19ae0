// Federated-learning simulator front end: runs a seeded scenario with the
// configured aggregation operator and writes per-round metrics as CSV or
// JSON. The effective configuration is echoed to stderr for provenance.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flsim/cli_config.hpp"
#include "flsim/federation.hpp"
#include "flsim/metrics_io.hpp"

namespace {

void echo_config(const flsim::ResolvedRun& run) {
  for (const auto& [key, value] : run.echo) std::cerr << "# " << key << "=" << value << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator with OWA-based robust aggregation"};

  std::string config_path;
  flsim::Options flags;
  app.add_option("--config", config_path, "flat key=value config file mirroring the flag names");
  app.add_option("--scenario", flags.scenario, "scenario preset: ad, non-ad or high-ad");
  app.add_option("--clients", flags.clients, "number of federated clients");
  app.add_option("--rounds", flags.rounds, "rounds of learning");
  app.add_option("--epochs", flags.epochs, "local training epochs per round");
  app.add_option("--runs", flags.runs, "independent repetitions to average");
  app.add_option("--aggregator", flags.aggregator,
                 "fedavg, wfedavg, al80, iowa-sq or iowa-dq");
  app.add_option("--yb", flags.yb, "share of weight given to the top-b fraction of clients");
  app.add_option("--a", flags.a, "quantifier parameter a");
  app.add_option("--b", flags.b, "quantifier parameter b");
  app.add_option("--c", flags.c, "quantifier parameter c (static operator only)");
  app.add_option("--wfedavg-mode", flags.wfedavg_mode, "as-written or normalized");
  app.add_option("--poison-mode", flags.poison_mode, "shuffle or class-map");
  app.add_option("--adversarial-fraction", flags.adversarial_fraction,
                 "fraction of clients poisoned (overrides the scenario preset)");
  app.add_option("--dataset", flags.dataset, "synthetic or idx");
  app.add_option("--idx-images", flags.idx_images, "IDX image file path");
  app.add_option("--idx-labels", flags.idx_labels, "IDX label file path");
  app.add_option("--labels-per-client", flags.labels_per_client,
                 "distinct classes per client in the non-IID partition");
  app.add_option("--seed", flags.seed, "master seed");
  app.add_option("--output", flags.output, "metrics destination path ('-' for stdout)");
  app.add_option("--format", flags.format, "csv or json");
  app.add_option("--synthetic-classes", flags.synthetic_classes, "synthetic class count");
  app.add_option("--synthetic-dim", flags.synthetic_dim, "synthetic feature dimension");
  app.add_option("--samples-per-class", flags.samples_per_class,
                 "synthetic samples per class");
  app.add_option("--spread", flags.spread, "synthetic within-class standard deviation");
  app.add_option("--learning-rate", flags.learning_rate, "SGD learning rate");
  app.add_option("--batch-size", flags.batch_size, "SGD minibatch size");
  app.add_option("--hidden-dims", flags.hidden_dims,
                 "comma-separated hidden layer sizes (empty = logistic regression)");
  app.add_option("--validation-fraction", flags.validation_fraction,
                 "validation share of the post-test remainder");
  app.add_option("--test-fraction", flags.test_fraction, "test share of the full dataset");
  app.add_option("--parallel", flags.parallel, "train clients concurrently (on/off)");

  CLI11_PARSE(app, argc, argv);

  try {
    flsim::Options opts;
    if (!config_path.empty()) opts = flsim::parse_config_file(config_path);
    opts = flsim::merge_options(opts, flags);

    flsim::ResolvedRun run = flsim::resolve_options(opts);
    const flsim::ScenarioData data = flsim::prepare_data(run);
    echo_config(run);

    const flsim::ScenarioResult result = flsim::run_scenario(run.fed, data, run.runs);
    flsim::emit_metrics(result, run.output, run.format, run.aggregator_label, run.echo);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
