#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>

#include "flsim/dataset.hpp"

using namespace flsim;

namespace {

std::map<int, std::size_t> histogram(const Dataset& data) {
  std::map<int, std::size_t> h;
  for (int y : data.labels) ++h[y];
  return h;
}

// multiset of (features, label) rows, for conservation checks
std::multiset<std::pair<std::vector<double>, int>> row_multiset(const Dataset& data) {
  std::multiset<std::pair<std::vector<double>, int>> rows;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto row = data.row(i);
    rows.emplace(std::vector<double>(row.begin(), row.end()), data.labels[i]);
  }
  return rows;
}

}  // namespace

TEST_CASE("synthetic blobs have exact per-class counts", "[dataset]") {
  const auto data = generate_synthetic(3, 4, 10, 0.5, 7);
  CHECK(data.n() == 30);
  CHECK(data.dim == 4);
  const auto h = histogram(data);
  for (int cls = 0; cls < 3; ++cls) CHECK(h.at(cls) == 10);
}

TEST_CASE("synthetic generation is deterministic", "[dataset]") {
  CHECK(generate_synthetic(4, 6, 25, 1.0, 99) == generate_synthetic(4, 6, 25, 1.0, 99));
  CHECK_FALSE(generate_synthetic(4, 6, 25, 1.0, 99) == generate_synthetic(4, 6, 25, 1.0, 100));
}

TEST_CASE("zero spread collapses each class onto its centroid", "[dataset]") {
  const auto data = generate_synthetic(3, 5, 4, 0.0, 11);
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.n(); ++j) {
      if (data.labels[i] != data.labels[j]) continue;
      const auto a = data.row(i), b = data.row(j);
      for (std::size_t d = 0; d < data.dim; ++d) CHECK(a[d] == b[d]);
    }
  }
}

TEST_CASE("validation split is stratified and disjoint", "[dataset]") {
  const auto data = generate_synthetic(10, 4, 10, 0.5, 3);  // 100 samples, 10 per class
  const auto [train, validation] = split_validation(data, 0.2, 5);
  CHECK(validation.n() == 20);
  CHECK(train.n() == 80);
  for (const auto& [cls, count] : histogram(validation)) CHECK(count == 2);

  // disjoint and conservative: the two sides together are exactly the input
  auto combined = row_multiset(train);
  for (const auto& row : row_multiset(validation)) combined.insert(row);
  CHECK(combined == row_multiset(data));

  CHECK(split_validation(data, 0.2, 5).second == validation);
}

TEST_CASE("degenerate split fractions are rejected", "[dataset]") {
  const auto data = generate_synthetic(2, 2, 3, 0.5, 1);
  CHECK_THROWS_AS(split_validation(data, 0.0, 1), SplitError);
  CHECK_THROWS_AS(split_validation(data, 1.0, 1), SplitError);
  CHECK_THROWS_AS(split_validation(data, 0.01, 1), SplitError);  // rounds to an empty side
}

TEST_CASE("non-iid partition covers every class with singleton label sets", "[dataset]") {
  const auto data = generate_synthetic(5, 3, 8, 0.5, 13);
  const auto parts = partition_non_iid(data, PartitionPlan{5, 1, 21});
  REQUIRE(parts.size() == 5);
  std::set<int> covered;
  for (const auto& part : parts) {
    const std::set<int> labels(part.labels.begin(), part.labels.end());
    CHECK(labels.size() == 1);
    covered.insert(labels.begin(), labels.end());
  }
  CHECK(covered.size() == 5);
}

TEST_CASE("non-iid partition conserves the dataset", "[dataset]") {
  const auto data = generate_synthetic(10, 4, 20, 0.8, 17);
  const auto parts = partition_non_iid(data, PartitionPlan{20, 2, 23});
  std::multiset<std::pair<std::vector<double>, int>> combined;
  for (const auto& part : parts) {
    const std::set<int> labels(part.labels.begin(), part.labels.end());
    CHECK(labels.size() <= 2);
    for (const auto& row : row_multiset(part)) combined.insert(row);
  }
  CHECK(combined == row_multiset(data));
}

TEST_CASE("non-iid partition is reproducible per seed", "[dataset]") {
  const auto data = generate_synthetic(10, 4, 20, 0.8, 17);
  const auto a = partition_non_iid(data, PartitionPlan{20, 2, 31});
  const auto b = partition_non_iid(data, PartitionPlan{20, 2, 31});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("infeasible partition plans are rejected", "[dataset]") {
  const auto data = generate_synthetic(10, 4, 5, 0.5, 19);
  CHECK_THROWS_AS(partition_non_iid(data, PartitionPlan{3, 2, 1}), PartitionError);   // 6 < 10 slots
  CHECK_THROWS_AS(partition_non_iid(data, PartitionPlan{4, 11, 1}), PartitionError);  // L > classes
  CHECK_THROWS_AS(partition_non_iid(data, PartitionPlan{0, 2, 1}), PartitionError);
}

TEST_CASE("shuffle poisoning permutes labels and keeps the multiset", "[dataset]") {
  Dataset data;
  data.dim = 2;
  data.append_row(std::vector<double>{0.0, 0.0}, 0);
  data.append_row(std::vector<double>{1.0, 0.0}, 0);
  data.append_row(std::vector<double>{0.0, 1.0}, 1);
  data.append_row(std::vector<double>{1.0, 1.0}, 2);

  const auto poisoned = poison_labels(data, PoisonMode::Shuffle, 3);
  CHECK(poisoned.features == data.features);
  auto sorted_before = data.labels, sorted_after = poisoned.labels;
  std::sort(sorted_before.begin(), sorted_before.end());
  std::sort(sorted_after.begin(), sorted_after.end());
  CHECK(sorted_before == sorted_after);
  CHECK(poison_labels(data, PoisonMode::Shuffle, 3) == poisoned);

  Dataset single;
  single.dim = 1;
  single.append_row(std::vector<double>{0.5}, 4);
  CHECK(poison_labels(single, PoisonMode::Shuffle, 9) == single);
}

TEST_CASE("class-map poisoning applies a derangement", "[dataset]") {
  Dataset data;
  data.dim = 1;
  data.append_row(std::vector<double>{0.1}, 0);
  data.append_row(std::vector<double>{0.2}, 1);
  data.append_row(std::vector<double>{0.3}, 0);
  const auto poisoned = poison_labels(data, PoisonMode::ClassMap, 7);
  // two distinct labels admit exactly one derangement: the swap
  CHECK(poisoned.labels == std::vector<int>{1, 0, 1});
  CHECK(poisoned.features == data.features);

  // no label keeps its identity, whatever the class count
  Dataset many;
  many.dim = 1;
  for (int cls = 0; cls < 6; ++cls)
    for (int s = 0; s < 3; ++s) many.append_row(std::vector<double>{0.1 * cls}, cls);
  const auto mapped = poison_labels(many, PoisonMode::ClassMap, 11);
  for (std::size_t i = 0; i < many.n(); ++i) CHECK(mapped.labels[i] != many.labels[i]);

  Dataset uniform;
  uniform.dim = 1;
  uniform.append_row(std::vector<double>{0.0}, 3);
  uniform.append_row(std::vector<double>{1.0}, 3);
  CHECK_THROWS_AS(poison_labels(uniform, PoisonMode::ClassMap, 1), DerangementError);
}

TEST_CASE("poisoning rejects empty datasets", "[dataset]") {
  Dataset empty;
  empty.dim = 1;
  CHECK_THROWS_AS(poison_labels(empty, PoisonMode::Shuffle, 1), EmptyDataError);
}
