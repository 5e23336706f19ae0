#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

// Row-major feature matrix with integer class labels.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> features;  // size() == n() * dim
  std::vector<int> labels;

  std::size_t n() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features.data() + i * dim, dim);
  }

  void append_row(std::span<const double> x, int label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }

  int max_label() const {
    int m = -1;
    for (int y : labels) m = std::max(m, y);
    return m;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct PartitionPlan {
  std::size_t n_clients = 1;
  std::size_t labels_per_client = 2;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::map<int, std::vector<std::size_t>> indices_by_label(const Dataset& data) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < data.n(); ++i) by_label[data.labels[i]].push_back(i);
  return by_label;
}

inline Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.dim = data.dim;
  out.features.reserve(rows.size() * data.dim);
  out.labels.reserve(rows.size());
  for (std::size_t i : rows) out.append_row(data.row(i), data.labels[i]);
  return out;
}

}  // namespace detail

// Gaussian blobs, one centroid per class. Centroids sit on a scaled simplex
// (orthogonal basis vectors when the dimension allows, a circle in the first
// two coordinates otherwise) plus a small seeded jitter; `spread` is the
// per-coordinate standard deviation of the samples around their centroid.
inline Dataset generate_synthetic(int num_classes, std::size_t dim, std::size_t samples_per_class,
                                  double spread, std::uint64_t seed) {
  if (num_classes < 2 || dim < 2 || samples_per_class < 1 || spread < 0.0)
    throw std::invalid_argument("generate_synthetic: need num_classes >= 2, dim >= 2, "
                                "samples_per_class >= 1, spread >= 0");
  constexpr double kScale = 4.0;
  auto rng = make_rng(mix_seed({seed, 0x5359'4e54ULL}));
  std::normal_distribution<double> jitter(0.0, 0.02 * kScale);
  std::vector<std::vector<double>> centroids(static_cast<std::size_t>(num_classes),
                                             std::vector<double>(dim, 0.0));
  for (int cls = 0; cls < num_classes; ++cls) {
    auto& c = centroids[static_cast<std::size_t>(cls)];
    if (static_cast<std::size_t>(num_classes) <= dim) {
      c[static_cast<std::size_t>(cls)] = kScale;
    } else {
      const double angle = 2.0 * 3.14159265358979323846 * cls / num_classes;
      c[0] = kScale * std::cos(angle);
      c[1] = kScale * std::sin(angle);
    }
    for (auto& coord : c) coord += jitter(rng);
  }

  Dataset out;
  out.dim = dim;
  out.features.reserve(static_cast<std::size_t>(num_classes) * samples_per_class * dim);
  out.labels.reserve(static_cast<std::size_t>(num_classes) * samples_per_class);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(dim);
  for (int cls = 0; cls < num_classes; ++cls) {
    const auto& c = centroids[static_cast<std::size_t>(cls)];
    for (std::size_t s = 0; s < samples_per_class; ++s) {
      for (std::size_t d = 0; d < dim; ++d) x[d] = c[d] + spread * noise(rng);
      out.append_row(x, cls);
    }
  }
  return out;
}

// Stratified split: per class, a seeded shuffle, then round(fraction * count)
// rows go to the validation side. Returns (train, validation); the splits are
// disjoint by construction and class proportions match within one sample per
// class.
inline std::pair<Dataset, Dataset> split_validation(const Dataset& data,
                                                    double validation_fraction,
                                                    std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw SplitError("validation fraction must lie in (0, 1)");
  auto by_label = detail::indices_by_label(data);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  auto rng = make_rng(mix_seed({seed, 0x53'504cULL}));
  for (auto& [label, rows] : by_label) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(rows.size())));
    for (std::size_t i = 0; i < rows.size(); ++i)
      (i < take ? validation_rows : train_rows).push_back(rows[i]);
  }
  if (train_rows.empty() || validation_rows.empty())
    throw SplitError("validation fraction would leave an empty split");
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(validation_rows.begin(), validation_rows.end());
  return {detail::take_rows(data, train_rows), detail::take_rows(data, validation_rows)};
}

// Non-IID partition: each client receives samples from labels_per_client
// randomly drawn classes. Coverage is repaired afterwards so every class is
// held by at least one client (two where the slot budget allows, so no class
// is hostage to a single client); each class's samples are then dealt out
// evenly among its holders. Holder counts vary between classes, so client
// data sizes are deliberately heterogeneous. Every sample lands on exactly
// one client.
inline std::vector<Dataset> partition_non_iid(const Dataset& data, const PartitionPlan& plan) {
  if (data.empty()) throw PartitionError("cannot partition an empty dataset");
  if (plan.n_clients == 0) throw PartitionError("need at least one client");
  auto by_label = detail::indices_by_label(data);
  std::vector<int> classes;
  for (const auto& [label, rows] : by_label) classes.push_back(label);
  const std::size_t k = classes.size();
  if (plan.labels_per_client == 0 || plan.labels_per_client > k)
    throw PartitionError("labels_per_client must lie in [1, number of classes]");
  if (plan.n_clients * plan.labels_per_client < k)
    throw PartitionError("too few client label slots to cover every class");

  auto rng = make_rng(mix_seed({plan.seed, 0x50'4152ULL}));

  // Draw per-client class sets, then repair under-held classes by stealing a
  // slot from a class that can spare one.
  std::vector<std::vector<int>> client_classes(plan.n_clients);
  std::map<int, int> holder_count;
  for (auto& chosen : client_classes) {
    std::sample(classes.begin(), classes.end(), std::back_inserter(chosen),
                static_cast<std::ptrdiff_t>(plan.labels_per_client), rng);
    for (int cls : chosen) ++holder_count[cls];
  }
  const int min_holders =
      plan.n_clients * plan.labels_per_client >= 2 * k && plan.n_clients >= 2 ? 2 : 1;
  for (int target = 1; target <= min_holders; ++target) {
    for (int cls : classes) {
      while (holder_count[cls] < target) {
        bool placed = false;
        for (std::size_t client = 0; client < plan.n_clients && !placed; ++client) {
          auto& chosen = client_classes[client];
          if (std::find(chosen.begin(), chosen.end(), cls) != chosen.end()) continue;
          for (auto& held : chosen) {
            if (holder_count[held] > target) {
              --holder_count[held];
              held = cls;
              ++holder_count[cls];
              placed = true;
              break;
            }
          }
        }
        if (!placed) throw PartitionError("could not cover every class");
      }
    }
  }

  // Deal each class's rows to its holders in near-equal chunks.
  std::vector<std::vector<std::size_t>> client_rows(plan.n_clients);
  for (int cls : classes) {
    std::vector<std::size_t> holders;
    for (std::size_t client = 0; client < plan.n_clients; ++client) {
      const auto& chosen = client_classes[client];
      if (std::find(chosen.begin(), chosen.end(), cls) != chosen.end()) holders.push_back(client);
    }
    auto rows = by_label[cls];
    std::shuffle(rows.begin(), rows.end(), rng);
    std::shuffle(holders.begin(), holders.end(), rng);
    const std::size_t base = rows.size() / holders.size();
    const std::size_t extra = rows.size() % holders.size();
    std::size_t cursor = 0;
    for (std::size_t h = 0; h < holders.size(); ++h) {
      const std::size_t count = base + (h < extra ? 1 : 0);
      for (std::size_t i = 0; i < count; ++i) client_rows[holders[h]].push_back(rows[cursor++]);
    }
  }

  std::vector<Dataset> out;
  out.reserve(plan.n_clients);
  for (auto& rows : client_rows) {
    std::sort(rows.begin(), rows.end());
    out.push_back(detail::take_rows(data, rows));
  }
  return out;
}

enum class PoisonMode { Shuffle, ClassMap };

// Dirty-label poisoning. Shuffle mode permutes the label vector across sample
// indices (the label multiset is preserved); class-map mode applies a seeded
// derangement of the class identities present in the data. Features are never
// touched.
inline Dataset poison_labels(const Dataset& data, PoisonMode mode, std::uint64_t seed) {
  if (data.empty()) throw EmptyDataError("cannot poison an empty dataset");
  Dataset out = data;
  auto rng = make_rng(mix_seed({seed, 0x50'4f49ULL}));
  if (mode == PoisonMode::Shuffle) {
    std::shuffle(out.labels.begin(), out.labels.end(), rng);
    return out;
  }
  std::set<int> present(data.labels.begin(), data.labels.end());
  if (present.size() < 2)
    throw DerangementError("class-map poisoning needs at least two distinct labels");
  std::vector<int> from(present.begin(), present.end());
  // Sattolo's algorithm: a uniformly random single-cycle permutation, hence a
  // derangement for any size >= 2.
  std::vector<int> to = from;
  for (std::size_t i = to.size() - 1; i >= 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(to[i], to[pick(rng)]);
  }
  std::map<int, int> relabel;
  for (std::size_t i = 0; i < from.size(); ++i) relabel[from[i]] = to[i];
  for (auto& y : out.labels) y = relabel[y];
  return out;
}

}  // namespace flsim
