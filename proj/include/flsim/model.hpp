#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "flsim/dataset.hpp"
#include "flsim/errors.hpp"
#include "flsim/param_vector.hpp"
#include "flsim/rng.hpp"

namespace flsim {

// Multiclass classifier: a multilayer perceptron with rectified-linear hidden
// layers and a softmax output, trained with minibatch SGD on cross-entropy.
// An empty hidden_dims list gives multinomial logistic regression.
struct ModelSpec {
  std::size_t input_dim = 1;
  int num_classes = 2;
  std::vector<std::size_t> hidden_dims;

  void validate() const {
    if (input_dim < 1 || num_classes < 2)
      throw std::invalid_argument("model spec needs input_dim >= 1 and num_classes >= 2");
    for (std::size_t h : hidden_dims)
      if (h == 0) throw std::invalid_argument("hidden layer sizes must be positive");
  }

  std::vector<std::size_t> layer_dims() const {
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(static_cast<std::size_t>(num_classes));
    return dims;
  }

  // Weight matrix then bias row per layer.
  std::vector<LayerShape> param_layout() const {
    std::vector<LayerShape> shapes;
    const auto dims = layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      shapes.push_back({dims[l], dims[l + 1]});
      shapes.push_back({1, dims[l + 1]});
    }
    return shapes;
  }

  std::size_t param_count() const {
    std::size_t total = 0;
    for (const auto& s : param_layout()) total += s.size();
    return total;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0))
      throw std::invalid_argument("train config needs epochs >= 1, batch_size >= 1, "
                                  "learning_rate > 0");
  }
};

namespace detail {

inline void check_params_match(const ParamVector& params, const ModelSpec& spec) {
  if (params.shapes != spec.param_layout() || params.size() != spec.param_count())
    throw ShapeError("parameter vector does not match the model spec");
}

// Offsets of the weight/bias blocks of layer l inside the flat vector.
struct LayerView {
  std::size_t w_offset;
  std::size_t b_offset;
  std::size_t in;
  std::size_t out;
};

inline std::vector<LayerView> layer_views(const ModelSpec& spec) {
  std::vector<LayerView> views;
  const auto dims = spec.layer_dims();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LayerView v{offset, offset + dims[l] * dims[l + 1], dims[l], dims[l + 1]};
    offset = v.b_offset + v.out;
    views.push_back(v);
  }
  return views;
}

inline void softmax_rows(std::vector<double>& logits, std::size_t n_rows, std::size_t k) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    double* row = logits.data() + r * k;
    const double m = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - m);
      sum += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
  }
}

// Forward pass keeping every layer's activations; activations[0] is the
// input, the last entry holds softmax probabilities.
inline std::vector<std::vector<double>> forward_activations(const ParamVector& params,
                                                            const ModelSpec& spec,
                                                            const std::vector<double>& features,
                                                            std::size_t n_rows) {
  const auto views = layer_views(spec);
  std::vector<std::vector<double>> acts(views.size() + 1);
  acts[0] = features;
  for (std::size_t l = 0; l < views.size(); ++l) {
    const auto& v = views[l];
    const double* w = params.values.data() + v.w_offset;
    const double* b = params.values.data() + v.b_offset;
    const auto& in = acts[l];
    auto& out = acts[l + 1];
    out.assign(n_rows * v.out, 0.0);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double* x = in.data() + r * v.in;
      double* y = out.data() + r * v.out;
      for (std::size_t j = 0; j < v.out; ++j) y[j] = b[j];
      for (std::size_t i = 0; i < v.in; ++i) {
        const double xi = x[i];
        const double* wrow = w + i * v.out;
        for (std::size_t j = 0; j < v.out; ++j) y[j] += xi * wrow[j];
      }
    }
    const bool last = (l + 1 == views.size());
    if (last) {
      softmax_rows(out, n_rows, v.out);
    } else {
      for (auto& y : out) y = std::max(0.0, y);
    }
  }
  return acts;
}

}  // namespace detail

// Deterministic pseudo-random initialization: weights uniform in
// (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
inline ParamVector init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector params;
  params.shapes = spec.param_layout();
  params.values.assign(spec.param_count(), 0.0);
  auto rng = make_rng(mix_seed({seed, 0x494e'4954ULL}));
  for (const auto& v : detail::layer_views(spec)) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(v.in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < v.in * v.out; ++i) params.values[v.w_offset + i] = dist(rng);
  }
  return params;
}

// Class-probability matrix (n_rows x num_classes), each row summing to 1.
inline std::vector<double> forward(const ParamVector& params, const ModelSpec& spec,
                                   const std::vector<double>& features, std::size_t n_rows) {
  spec.validate();
  detail::check_params_match(params, spec);
  if (features.size() != n_rows * spec.input_dim)
    throw ShapeError("feature matrix width does not match the model input dimension");
  auto acts = detail::forward_activations(params, spec, features, n_rows);
  return std::move(acts.back());
}

inline std::vector<double> forward(const ParamVector& params, const ModelSpec& spec,
                                   const Dataset& data) {
  if (data.dim != spec.input_dim)
    throw ShapeError("dataset dimension does not match the model input dimension");
  return forward(params, spec, data.features, data.n());
}

// Mean cross-entropy over the dataset; probabilities clamped at 1e-12.
inline double mean_cross_entropy(const ParamVector& params, const ModelSpec& spec,
                                 const Dataset& data) {
  if (data.empty()) throw EmptyDataError("cannot evaluate loss on an empty dataset");
  const auto probs = forward(params, spec, data);
  const auto k = static_cast<std::size_t>(spec.num_classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < data.n(); ++r) {
    const double p = probs[r * k + static_cast<std::size_t>(data.labels[r])];
    loss -= std::log(std::max(p, 1e-12));
  }
  return loss / static_cast<double>(data.n());
}

// Argmax-prediction accuracy; probability ties resolve to the lowest class.
inline double evaluate_accuracy(const ParamVector& params, const ModelSpec& spec,
                                const Dataset& data) {
  if (data.empty()) throw EmptyDataError("cannot evaluate accuracy on an empty dataset");
  const auto probs = forward(params, spec, data);
  const auto k = static_cast<std::size_t>(spec.num_classes);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.n(); ++r) {
    const double* row = probs.data() + r * k;
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (row[j] > row[best]) best = j;
    if (static_cast<int>(best) == data.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.n());
}

// Minibatch SGD on cross-entropy. Runs epochs * ceil(n / batch_size) steps;
// deterministic for a fixed seed; the input parameters are not modified.
inline ParamVector train_local(const ParamVector& params, const ModelSpec& spec,
                               const Dataset& data, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  detail::check_params_match(params, spec);
  if (data.empty()) throw EmptyDataError("cannot train on an empty dataset");
  if (data.dim != spec.input_dim)
    throw ShapeError("dataset dimension does not match the model input dimension");
  if (data.max_label() >= spec.num_classes)
    throw std::invalid_argument("dataset label outside the model's class range");

  const auto views = detail::layer_views(spec);
  const auto k = static_cast<std::size_t>(spec.num_classes);
  ParamVector theta = params;
  std::vector<double> grad(theta.size());
  std::vector<std::size_t> order(data.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(mix_seed({cfg.seed, 0x54'524eULL}));

  std::vector<double> batch_features;
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < data.n(); start += cfg.batch_size) {
      const std::size_t stop = std::min(start + cfg.batch_size, data.n());
      const std::size_t bn = stop - start;
      batch_features.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const auto row = data.row(order[i]);
        batch_features.insert(batch_features.end(), row.begin(), row.end());
        batch_labels.push_back(data.labels[order[i]]);
      }

      auto acts = detail::forward_activations(theta, spec, batch_features, bn);
      const auto& probs = acts.back();
      double loss = 0.0;
      for (std::size_t r = 0; r < bn; ++r)
        loss -= std::log(std::max(probs[r * k + static_cast<std::size_t>(batch_labels[r])], 1e-12));
      loss /= static_cast<double>(bn);
      if (!std::isfinite(loss)) throw DivergenceError("training loss is not finite");

      // Backpropagation: delta starts as (p - onehot) / batch size.
      std::fill(grad.begin(), grad.end(), 0.0);
      std::vector<double> delta = probs;
      for (std::size_t r = 0; r < bn; ++r)
        delta[r * k + static_cast<std::size_t>(batch_labels[r])] -= 1.0;
      for (auto& d : delta) d /= static_cast<double>(bn);

      for (std::size_t l = views.size(); l-- > 0;) {
        const auto& v = views[l];
        const auto& in = acts[l];
        const double* w = theta.values.data() + v.w_offset;
        double* gw = grad.data() + v.w_offset;
        double* gb = grad.data() + v.b_offset;
        for (std::size_t r = 0; r < bn; ++r) {
          const double* x = in.data() + r * v.in;
          const double* d = delta.data() + r * v.out;
          for (std::size_t j = 0; j < v.out; ++j) gb[j] += d[j];
          for (std::size_t i = 0; i < v.in; ++i) {
            const double xi = x[i];
            double* grow = gw + i * v.out;
            for (std::size_t j = 0; j < v.out; ++j) grow[j] += xi * d[j];
          }
        }
        if (l > 0) {
          std::vector<double> prev(bn * v.in, 0.0);
          for (std::size_t r = 0; r < bn; ++r) {
            const double* d = delta.data() + r * v.out;
            const double* a = in.data() + r * v.in;
            double* p = prev.data() + r * v.in;
            for (std::size_t i = 0; i < v.in; ++i) {
              if (a[i] <= 0.0) continue;  // rectified-linear gate
              const double* wrow = w + i * v.out;
              double acc = 0.0;
              for (std::size_t j = 0; j < v.out; ++j) acc += wrow[j] * d[j];
              p[i] = acc;
            }
          }
          delta = std::move(prev);
        }
      }

      for (std::size_t i = 0; i < theta.size(); ++i)
        theta.values[i] -= cfg.learning_rate * grad[i];
      if (!theta.all_finite()) throw DivergenceError("parameters diverged during training");
    }
  }
  return theta;
}

}  // namespace flsim
