#ifndef ADVBATCH_MODEL_HPP
#define ADVBATCH_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/loss.hpp"
#include "advbatch/random.hpp"
#include "advbatch/tape.hpp"
#include "advbatch/tensor.hpp"

namespace advbatch {

/// Multilayer perceptron layout [D, h1, ..., C] with ReLU on hidden layers.
struct ModelSpec {
  std::vector<std::size_t> layer_dims;
  std::uint64_t seed = 0;

  void validate() const {
    if (layer_dims.size() < 3) throw ContractError("ModelSpec: need at least one hidden layer ([D, h, C])");
    for (std::size_t d : layer_dims)
      if (d == 0) throw ContractError("ModelSpec: layer dimensions must be positive");
  }
};

struct Layer {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct ModelParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.front().weight.shape()[0]; }
  std::size_t num_classes() const { return layers.back().weight.shape()[1]; }

  /// Same parameters rounded to another precision.
  ModelParams to(Precision p) const {
    ModelParams out;
    for (const auto& l : layers) out.layers.push_back({l.weight.to(p), l.bias.to(p)});
    return out;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline ModelParams init_params(const ModelSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  ModelParams params;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    const std::size_t in = spec.layer_dims[l], out = spec.layer_dims[l + 1];
    const double bound = glorot_bound(in, out);
    std::vector<double> w(in * out);
    for (double& v : w) v = rng.uniform(-bound, bound);
    params.layers.push_back({Tensor(Shape{in, out}, std::move(w)), Tensor::filled(Shape{out}, 0.0)});
  }
  return params;
}

/// Parameters recorded on a tape.
struct BoundParams {
  std::vector<NodeId> weights;
  std::vector<NodeId> biases;
};

/// Records parameters as constants (attacks) or as differentiable inputs (training).
inline BoundParams bind(Tape& tape, const ModelParams& params, bool trainable = false) {
  BoundParams b;
  for (const auto& l : params.layers) {
    b.weights.push_back(trainable ? tape.input(l.weight) : tape.constant(l.weight));
    b.biases.push_back(trainable ? tape.input(l.bias) : tape.constant(l.bias));
  }
  return b;
}

/// Affine + ReLU stack; the last layer is affine only.
inline NodeId logits(Tape& tape, const BoundParams& params, NodeId x) {
  const Shape& xs = tape.value(x).shape();
  if (xs.rank() != 2) throw ConformanceError("logits: input must be [N, D], got " + xs.str());
  const std::size_t rows = xs[0];
  NodeId h = x;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    h = tape.add(tape.matmul(h, params.weights[l]), tape.broadcast(params.biases[l], 0, rows));
    if (l + 1 < params.weights.size()) h = tape.relu(h);
  }
  return h;
}

inline Tensor logits(const ModelParams& params, const Tensor& x, Precision precision = Precision::Full32) {
  Tape tape(precision);
  const BoundParams b = bind(tape, params);
  return tape.value(logits(tape, b, tape.constant(x)));
}

inline std::vector<int> argmax_rows(const Tensor& scores) {
  const std::size_t rows = scores.shape()[0], cols = scores.shape()[1];
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = scores.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  (void)cols;
  return out;
}

/// Full32 class predictions.
inline std::vector<int> predict(const ModelParams& params, const Tensor& x) {
  return argmax_rows(logits(params, x, Precision::Full32));
}

struct Evaluation {
  double accuracy = 0.0;
  double mean_confidence = 0.0;  // mean max-softmax probability
};

inline Evaluation evaluate(const ModelParams& params, const LabeledBatch& data) {
  const Tensor lsm = log_softmax(logits(params, data.inputs, Precision::Full32));
  const std::vector<int> pred = argmax_rows(lsm);
  Evaluation e;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (pred[n] == data.labels[n]) e.accuracy += 1.0;
    e.mean_confidence += std::exp(lsm.at(n, static_cast<std::size_t>(pred[n])));
  }
  e.accuracy /= static_cast<double>(data.size());
  e.mean_confidence /= static_cast<double>(data.size());
  return e;
}

struct TrainConfig {
  std::size_t epochs = 400;
  double lr = 0.1;
  std::size_t batch_size = 32;
  double target_accuracy = 0.99;
};

struct TrainResult {
  ModelParams params;
  Evaluation train;
  bool reached_target = false;
};

/// Minibatch SGD on Mean cross-entropy at Full32. The sample order is reshuffled
/// each epoch from a stream seeded by `spec.seed`, so training is deterministic.
/// Falling short of `target_accuracy` is reported through `reached_target`.
inline TrainResult train_sgd(const ModelSpec& spec, const LabeledBatch& data, const TrainConfig& cfg) {
  spec.validate();
  if (cfg.epochs < 1) throw ContractError("train_sgd: epochs must be >= 1");
  if (!(cfg.lr >= 0.0)) throw ContractError("train_sgd: learning rate must be non-negative");
  if (cfg.batch_size < 1) throw ContractError("train_sgd: batch size must be >= 1");
  data.validate(spec.layer_dims.back());
  if (data.dim() != spec.layer_dims.front())
    throw ConformanceError("train_sgd: data has " + std::to_string(data.dim()) + " features, model expects " +
                           std::to_string(spec.layer_dims.front()));

  ModelParams params = init_params(spec);
  Rng order_rng(hash_combine(spec.seed, 0x7261696eULL));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t dim = data.dim();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<double> xs;
      std::vector<int> ys;
      xs.reserve((stop - start) * dim);
      for (std::size_t k = start; k < stop; ++k) {
        const auto row = data.inputs.row(order[k]);
        xs.insert(xs.end(), row.begin(), row.end());
        ys.push_back(data.labels[order[k]]);
      }
      Tape tape(Precision::Full32);
      const BoundParams bound = bind(tape, params, true);
      const NodeId x = tape.constant(Tensor(Shape{stop - start, dim}, std::move(xs)));
      const NodeId loss = cross_entropy(tape, logits(tape, bound, x), ys, Reduction::Mean);
      const auto grads = tape.gradient(loss, tape.input_ids());
      // input_ids are (W0, b0, W1, b1, ...) in bind order
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto step = [&](const Tensor& p, const Tensor& g) {
          std::vector<double> v(p.values().begin(), p.values().end());
          for (std::size_t i = 0; i < v.size(); ++i) v[i] -= cfg.lr * g[i];
          return Tensor(p.shape(), std::move(v));
        };
        params.layers[l].weight = step(params.layers[l].weight, grads[2 * l]);
        params.layers[l].bias = step(params.layers[l].bias, grads[2 * l + 1]);
      }
    }
  }

  TrainResult result{params, evaluate(params, data), false};
  result.reached_target = result.train.accuracy >= cfg.target_accuracy;
  return result;
}

}  // namespace advbatch

#endif  // ADVBATCH_MODEL_HPP
