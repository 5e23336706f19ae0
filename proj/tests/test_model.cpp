#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "flsim/model.hpp"

using namespace flsim;

namespace {

Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t dim, int classes) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_int_distribution<int> label(0, classes - 1);
  Dataset data;
  data.dim = dim;
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : row) x = coord(rng);
    data.append_row(row, label(rng));
  }
  return data;
}

ModelSpec random_spec(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  std::uniform_int_distribution<int> classes(2, 4);
  std::uniform_int_distribution<int> layout(0, 2);
  std::uniform_int_distribution<std::size_t> hidden(1, 8);
  ModelSpec spec;
  spec.input_dim = dim(rng);
  spec.num_classes = classes(rng);
  if (layout(rng) > 0) spec.hidden_dims = {hidden(rng)};
  return spec;
}

// analytic gradient recovered from one full-batch SGD step
std::vector<double> one_step_gradient(const ParamVector& params, const ModelSpec& spec,
                                      const Dataset& data, double lr) {
  TrainConfig cfg{1, data.n(), lr, 99};
  const auto stepped = train_local(params, spec, data, cfg);
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = (params.values[i] - stepped.values[i]) / lr;
  return grad;
}

}  // namespace

TEST_CASE("initialization is deterministic and shaped by the spec", "[model]") {
  const ModelSpec logistic{7, 3, {}};
  CHECK(init_model(logistic, 42) == init_model(logistic, 42));
  CHECK(init_model(logistic, 42).values != init_model(logistic, 43).values);
  CHECK(init_model(logistic, 1).size() == 7 * 3 + 3);

  const ModelSpec mlp{4, 3, {16}};
  CHECK(mlp.param_count() == 131);
  CHECK(init_model(mlp, 9).size() == 131);
  CHECK(init_model(mlp, 9).shape_size() == 131);
}

TEST_CASE("zero parameters give the uniform distribution", "[model]") {
  const ModelSpec spec{3, 4, {}};
  ParamVector zero;
  zero.shapes = spec.param_layout();
  zero.values.assign(spec.param_count(), 0.0);
  const auto probs = forward(zero, spec, {0.5, -1.0, 2.0}, 1);
  for (double p : probs) CHECK(p == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("probability rows sum to one", "[model]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = random_spec(rng);
    const auto params = init_model(spec, trial);
    const auto data = random_dataset(rng, 12, spec.input_dim, spec.num_classes);
    const auto probs = forward(params, spec, data);
    const auto k = static_cast<std::size_t>(spec.num_classes);
    for (std::size_t r = 0; r < data.n(); ++r) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        sum += probs[r * k + j];
        CHECK(probs[r * k + j] >= 0.0);
      }
      CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("forward matches a hand-computed softmax", "[model]") {
  const ModelSpec spec{2, 2, {}};
  ParamVector params;
  params.shapes = spec.param_layout();
  params.values = {1.0, -0.5, 0.25, 2.0, 0.1, -0.1};  // W rows then bias
  const std::vector<double> x = {0.3, -1.2};
  const double z0 = 0.3 * 1.0 + (-1.2) * 0.25 + 0.1;
  const double z1 = 0.3 * (-0.5) + (-1.2) * 2.0 + (-0.1);
  const double m = std::max(z0, z1);
  const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
  const auto probs = forward(params, spec, x, 1);
  CHECK(probs[0] == Catch::Approx(e0 / (e0 + e1)).margin(1e-12));
  CHECK(probs[1] == Catch::Approx(e1 / (e0 + e1)).margin(1e-12));
}

TEST_CASE("forward rejects mismatched shapes", "[model]") {
  const ModelSpec spec{3, 2, {}};
  const auto params = init_model(spec, 0);
  CHECK_THROWS_AS(forward(params, spec, {1.0, 2.0}, 1), ShapeError);
  const ModelSpec other{4, 2, {}};
  CHECK_THROWS_AS(forward(init_model(other, 0), spec, {1.0, 2.0, 3.0}, 1), ShapeError);
}

TEST_CASE("vanishing learning rate leaves parameters unchanged", "[model]") {
  std::mt19937_64 rng(11);
  const ModelSpec spec{3, 3, {}};
  const auto params = init_model(spec, 4);
  const auto data = random_dataset(rng, 6, 3, 3);
  const auto out = train_local(params, spec, data, TrainConfig{2, 4, 1e-300, 7});
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(std::abs(out.values[i] - params.values[i]) < 1e-12);
}

TEST_CASE("one step on a single sample reduces its loss", "[model]") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = random_spec(rng);
    const auto params = init_model(spec, trial * 3 + 1);
    const auto data = random_dataset(rng, 1, spec.input_dim, spec.num_classes);
    const double before = mean_cross_entropy(params, spec, data);
    const auto after_params = train_local(params, spec, data, TrainConfig{1, 1, 0.01, 0});
    CHECK(mean_cross_entropy(after_params, spec, data) <= before);
  }
}

TEST_CASE("full-batch step equals the hand-computed gradient step", "[model]") {
  // one sample (x = 1, y = 1), two classes, learning rate 1
  const ModelSpec spec{1, 2, {}};
  const auto params = init_model(spec, 5);
  Dataset data;
  data.dim = 1;
  data.append_row(std::vector<double>{1.0}, 1);

  const double z0 = params.values[0] + params.values[2];
  const double z1 = params.values[1] + params.values[3];
  const double m = std::max(z0, z1);
  const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
  const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
  // d loss / d logits = (p0, p1 - 1); x = 1 makes dW = db
  const double expected[4] = {params.values[0] - p0, params.values[1] - (p1 - 1.0),
                              params.values[2] - p0, params.values[3] - (p1 - 1.0)};
  const auto stepped = train_local(params, spec, data, TrainConfig{1, 1, 1.0, 0});
  for (int i = 0; i < 4; ++i)
    CHECK(stepped.values[static_cast<std::size_t>(i)] ==
          Catch::Approx(expected[i]).margin(1e-12));
}

TEST_CASE("analytic gradients match central finite differences", "[model]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 15; ++trial) {
    const auto spec = random_spec(rng);
    auto params = init_model(spec, trial);
    const auto data = random_dataset(rng, 6, spec.input_dim, spec.num_classes);
    const auto grad = one_step_gradient(params, spec, data, 1e-3);
    const double h = 1e-5;
    for (std::size_t i = 0; i < params.size(); ++i) {
      ParamVector plus = params, minus = params;
      plus.values[i] += h;
      minus.values[i] -= h;
      const double numeric =
          (mean_cross_entropy(plus, spec, data) - mean_cross_entropy(minus, spec, data)) /
          (2.0 * h);
      const double denom = std::max({1e-6, std::abs(grad[i]), std::abs(numeric)});
      CHECK(std::abs(grad[i] - numeric) / denom < 1e-4);
    }
  }
}

TEST_CASE("small steps never increase the full-batch loss", "[model]") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const auto spec = random_spec(rng);
    const auto params = init_model(spec, trial);
    const auto data = random_dataset(rng, 8, spec.input_dim, spec.num_classes);
    const double before = mean_cross_entropy(params, spec, data);
    const auto stepped = train_local(params, spec, data, TrainConfig{1, 8, 1e-3, 0});
    CHECK(mean_cross_entropy(stepped, spec, data) <= before + 1e-12);
  }
}

TEST_CASE("training is bitwise deterministic", "[model]") {
  std::mt19937_64 rng(23);
  const ModelSpec spec{4, 3, {6}};
  const auto params = init_model(spec, 2);
  const auto data = random_dataset(rng, 20, 4, 3);
  const TrainConfig cfg{3, 8, 0.05, 1234};
  CHECK(train_local(params, spec, data, cfg) == train_local(params, spec, data, cfg));
}

TEST_CASE("exploding steps raise a divergence error", "[model]") {
  // gradients of softmax cross-entropy are bounded by the feature scale, so
  // the overflow needs huge features, a huge step, and a wrong label
  const ModelSpec spec{2, 3, {}};
  const auto params = init_model(spec, 1);
  Dataset probe;
  probe.dim = 2;
  probe.append_row(std::vector<double>{1e160, 1e160}, 0);
  const auto probs = forward(params, spec, probe);
  std::size_t predicted = 0;
  for (std::size_t j = 1; j < 3; ++j)
    if (probs[j] > probs[predicted]) predicted = j;
  Dataset data;
  data.dim = 2;
  data.append_row(std::vector<double>{1e160, 1e160}, static_cast<int>((predicted + 1) % 3));
  CHECK_THROWS_AS(train_local(params, spec, data, TrainConfig{1, 1, 1e160, 0}),
                  DivergenceError);
}

TEST_CASE("empty datasets are rejected", "[model]") {
  const ModelSpec spec{3, 3, {}};
  const auto params = init_model(spec, 1);
  Dataset empty;
  empty.dim = 3;
  CHECK_THROWS_AS(train_local(params, spec, empty, TrainConfig{}), EmptyDataError);
  CHECK_THROWS_AS(evaluate_accuracy(params, spec, empty), EmptyDataError);
  CHECK_THROWS_AS(mean_cross_entropy(params, spec, empty), EmptyDataError);
}

TEST_CASE("accuracy counts argmax hits with ties to the lowest class", "[model]") {
  const ModelSpec spec{2, 4, {}};
  ParamVector zero;
  zero.shapes = spec.param_layout();
  zero.values.assign(spec.param_count(), 0.0);
  Dataset balanced;
  balanced.dim = 2;
  for (int cls = 0; cls < 4; ++cls)
    for (int s = 0; s < 5; ++s)
      balanced.append_row(std::vector<double>{0.1 * s, -0.2 * s}, cls);
  // uniform probabilities predict class 0 everywhere
  CHECK(evaluate_accuracy(zero, spec, balanced) == Catch::Approx(0.25).margin(1e-12));

  Dataset one;
  one.dim = 2;
  one.append_row(std::vector<double>{0.3, 0.4}, 0);
  CHECK(evaluate_accuracy(zero, spec, one) == 1.0);
}

TEST_CASE("enough capacity memorizes four separable points", "[model]") {
  const ModelSpec spec{2, 2, {16}};
  Dataset data;
  data.dim = 2;
  data.append_row(std::vector<double>{1.0, 1.0}, 0);
  data.append_row(std::vector<double>{1.0, 0.8}, 0);
  data.append_row(std::vector<double>{-1.0, -1.0}, 1);
  data.append_row(std::vector<double>{-0.8, -1.0}, 1);
  auto params = init_model(spec, 3);
  params = train_local(params, spec, data, TrainConfig{200, 4, 0.1, 5});
  CHECK(evaluate_accuracy(params, spec, data) == 1.0);
}
