#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flsim/errors.hpp"
#include "flsim/federation.hpp"

namespace flsim {

// Shortest decimal form that parses back to the same double; keeps metric
// files reproducible byte for byte.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline nlohmann::json weights_to_json(const WeightVector& weights) {
  nlohmann::json arr = nlohmann::json::array();
  for (double w : weights) arr.push_back(w);
  return arr;
}

inline void to_json(nlohmann::json& j, const RoundMetrics& m) {
  j = nlohmann::json{{"round", m.round_index},
                     {"global_accuracy", m.global_accuracy},
                     {"per_client_accuracy", m.per_client_accuracy},
                     {"c_used", m.c_used.has_value() ? nlohmann::json(*m.c_used)
                                                     : nlohmann::json(nullptr)},
                     {"weights", m.weights},
                     {"discarded_ids", std::vector<int>(m.discarded_ids.begin(),
                                                        m.discarded_ids.end())},
                     {"adversarial_discarded", m.adversarial_discarded},
                     {"benign_discarded", m.benign_discarded}};
}

inline void from_json(const nlohmann::json& j, RoundMetrics& m) {
  j.at("round").get_to(m.round_index);
  j.at("global_accuracy").get_to(m.global_accuracy);
  j.at("per_client_accuracy").get_to(m.per_client_accuracy);
  m.c_used = j.at("c_used").is_null() ? std::nullopt
                                      : std::optional<double>(j.at("c_used").get<double>());
  j.at("weights").get_to(m.weights);
  const auto ids = j.at("discarded_ids").get<std::vector<int>>();
  m.discarded_ids = std::set<int>(ids.begin(), ids.end());
  j.at("adversarial_discarded").get_to(m.adversarial_discarded);
  j.at("benign_discarded").get_to(m.benign_discarded);
}

inline void to_json(nlohmann::json& j, const RunSeries& s) {
  j = nlohmann::json{{"run", s.run_index},
                     {"adversarial_ids", std::vector<int>(s.adversarial_ids.begin(),
                                                          s.adversarial_ids.end())},
                     {"rounds", s.rounds}};
}

inline void from_json(const nlohmann::json& j, RunSeries& s) {
  j.at("run").get_to(s.run_index);
  const auto ids = j.at("adversarial_ids").get<std::vector<int>>();
  s.adversarial_ids = std::set<int>(ids.begin(), ids.end());
  j.at("rounds").get_to(s.rounds);
}

inline double mean_final_accuracy(const ScenarioResult& result) {
  double total = 0.0;
  for (const auto& series : result.runs) total += series.rounds.back().global_accuracy;
  return total / static_cast<double>(result.runs.size());
}

// CSV layout: one row per (run, round) with the columns
//   run, round, aggregator, global_accuracy, c_used, n_discarded,
//   adversarial_discarded, benign_discarded, weights_json
// plus a trailing summary row carrying the cross-run mean final accuracy.
inline void write_csv(std::ostream& out, const ScenarioResult& result,
                      const std::string& aggregator) {
  out << "run,round,aggregator,global_accuracy,c_used,n_discarded,"
         "adversarial_discarded,benign_discarded,weights_json\n";
  for (const auto& series : result.runs) {
    for (const auto& m : series.rounds) {
      out << series.run_index << ',' << m.round_index << ',' << aggregator << ','
          << format_double(m.global_accuracy) << ','
          << (m.c_used.has_value() ? format_double(*m.c_used) : std::string()) << ','
          << m.discarded_ids.size() << ',' << m.adversarial_discarded << ','
          << m.benign_discarded << ',' << '"' << weights_to_json(m.weights).dump() << '"'
          << '\n';
    }
  }
  const int final_round = result.runs.empty() ? 0 : result.runs.front().rounds.back().round_index;
  out << "summary," << final_round << ',' << aggregator << ','
      << format_double(mean_final_accuracy(result)) << ",,,,,\n";
}

inline nlohmann::json metrics_to_json(const ScenarioResult& result, const std::string& aggregator,
                                      const std::map<std::string, std::string>& config_echo = {}) {
  nlohmann::json j;
  j["aggregator"] = aggregator;
  if (!config_echo.empty()) j["config"] = config_echo;
  j["runs"] = result.runs;
  j["mean_global_accuracy"] = result.mean_global_accuracy;
  j["summary_final_accuracy"] = mean_final_accuracy(result);
  return j;
}

inline ScenarioResult metrics_from_json(const nlohmann::json& j) {
  ScenarioResult result;
  j.at("runs").get_to(result.runs);
  j.at("mean_global_accuracy").get_to(result.mean_global_accuracy);
  return result;
}

enum class MetricsFormat { Csv, Json };

// Writes the series to `destination` ("-" means stdout).
inline void emit_metrics(const ScenarioResult& result, const std::string& destination,
                         MetricsFormat format, const std::string& aggregator,
                         const std::map<std::string, std::string>& config_echo = {}) {
  std::ostringstream body;
  if (format == MetricsFormat::Csv) {
    write_csv(body, result, aggregator);
  } else {
    body << metrics_to_json(result, aggregator, config_echo).dump(2) << '\n';
  }
  if (destination == "-") {
    std::cout << body.str();
    return;
  }
  std::ofstream file(destination, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open metrics destination: " + destination);
  file << body.str();
  if (!file) throw std::runtime_error("failed writing metrics to: " + destination);
}

}  // namespace flsim
