#include "mimocal/calinet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "mimocal/errors.hpp"

namespace mimocal {
namespace {

double activate(Activation act, double z) {
  return act == Activation::kTanh ? std::tanh(z) : z;
}

// Derivative expressed through the activation value: tanh' = 1 - a^2.
double activate_deriv_from_value(Activation act, double a) {
  return act == Activation::kTanh ? 1.0 - a * a : 1.0;
}

void check_network(const NetworkParams& params) {
  if (params.layers.empty()) {
    throw StateError("network has no layers");
  }
  std::size_t dim = params.input_dim;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams& layer = params.layers[l];
    if (layer.W.cols != dim || layer.W.rows != layer.b.size()) {
      throw StateError("network layer " + std::to_string(l) +
                       " shapes are inconsistent");
    }
    dim = layer.W.rows;
  }
  if (dim != params.output_dim) {
    throw StateError("network output_dim does not match the last layer");
  }
}

// Scratch buffers reused across samples of a batch.
struct Workspace {
  ForwardCache cache;
  RealVector delta;
  RealVector delta_prev;
};

void forward_into(const NetworkParams& params, const RealVector& input,
                  ForwardCache& cache) {
  if (input.size() != params.input_dim) {
    throw ShapeError("forward: input has " + std::to_string(input.size()) +
                     " entries but the network expects " +
                     std::to_string(params.input_dim));
  }
  cache.activations.resize(params.layers.size() + 1);
  cache.activations[0] = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams& layer = params.layers[l];
    const RealVector& prev = cache.activations[l];
    RealVector& out = cache.activations[l + 1];
    out.assign(layer.W.rows, 0.0);
    for (std::size_t i = 0; i < layer.W.rows; ++i) {
      double z = layer.b[i];
      const double* w_row = &layer.W.data[i * layer.W.cols];
      for (std::size_t j = 0; j < layer.W.cols; ++j) z += w_row[j] * prev[j];
      out[i] = activate(layer.activation, z);
    }
  }
}

void zero_gradients(const NetworkParams& params, Gradients& grads) {
  grads.d_w.resize(params.layers.size());
  grads.d_b.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams& layer = params.layers[l];
    grads.d_w[l].rows = layer.W.rows;
    grads.d_w[l].cols = layer.W.cols;
    grads.d_w[l].data.assign(layer.W.data.size(), 0.0);
    grads.d_b[l].assign(layer.b.size(), 0.0);
  }
}

// Adds d(sum of squared errors)/d(params) of one cached sample to `grads`.
void accumulate_backward(const NetworkParams& params, const RealVector& target,
                         const ForwardCache& cache, Gradients& grads,
                         Workspace& ws) {
  const std::size_t L = params.layers.size();
  const RealVector& out = cache.activations[L];
  if (target.size() != out.size()) {
    throw ShapeError("backward: target has " + std::to_string(target.size()) +
                     " entries but the network outputs " +
                     std::to_string(out.size()));
  }
  ws.delta.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double err = 2.0 * (out[i] - target[i]);
    ws.delta[i] =
        err * activate_deriv_from_value(params.layers[L - 1].activation, out[i]);
  }
  for (std::size_t l = L; l-- > 0;) {
    const LayerParams& layer = params.layers[l];
    const RealVector& prev = cache.activations[l];
    RealMatrix& dw = grads.d_w[l];
    RealVector& db = grads.d_b[l];
    for (std::size_t i = 0; i < layer.W.rows; ++i) {
      const double d = ws.delta[i];
      db[i] += d;
      double* dw_row = &dw.data[i * dw.cols];
      for (std::size_t j = 0; j < dw.cols; ++j) dw_row[j] += d * prev[j];
    }
    if (l == 0) break;
    ws.delta_prev.assign(prev.size(), 0.0);
    for (std::size_t i = 0; i < layer.W.rows; ++i) {
      const double d = ws.delta[i];
      const double* w_row = &layer.W.data[i * layer.W.cols];
      for (std::size_t j = 0; j < layer.W.cols; ++j) {
        ws.delta_prev[j] += w_row[j] * d;
      }
    }
    const Activation prev_act = params.layers[l - 1].activation;
    for (std::size_t j = 0; j < prev.size(); ++j) {
      ws.delta_prev[j] *= activate_deriv_from_value(prev_act, prev[j]);
    }
    std::swap(ws.delta, ws.delta_prev);
  }
}

bool same_vector(const RealVector& a, const RealVector& b) {
  if (a.size() != b.size()) return false;
  return a.empty() ||
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

RealVector encode_channels(const ComplexMatrix& h) {
  RealVector v(2 * h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    v[2 * i] = h.data()[i].real();
    v[2 * i + 1] = h.data()[i].imag();
  }
  return v;
}

ComplexMatrix decode_channels(const RealVector& v, std::size_t rows,
                              std::size_t cols) {
  if (v.size() != 2 * rows * cols) {
    throw ShapeError("decode_channels: " + std::to_string(v.size()) +
                     " reals cannot fill " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  ComplexMatrix h(rows, cols);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h.data()[i] = cxd(v[2 * i], v[2 * i + 1]);
  }
  return h;
}

void init_network(const TrainConfig& config,
                  const std::vector<std::size_t>& layer_dims, Rng& rng,
                  NetworkParams& params, AdagradState& state) {
  if (layer_dims.size() < 2) {
    throw std::invalid_argument("init_network: layer_dims needs at least "
                                "input and output entries");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) {
      throw std::invalid_argument("init_network: layer dimensions must be >= 1");
    }
  }
  params.layers.clear();
  params.input_dim = layer_dims.front();
  params.output_dim = layer_dims.back();
  state.g_w.clear();
  state.g_b.clear();
  state.epsilon = 1e-8;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t fan_in = layer_dims[l];
    const std::size_t fan_out = layer_dims[l + 1];
    LayerParams layer;
    layer.W = RealMatrix(fan_out, fan_in);
    layer.b.assign(fan_out, 0.0);
    layer.activation = (l + 2 == layer_dims.size()) ? config.output_activation
                                                    : Activation::kTanh;
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : layer.W.data) {
      w = (2.0 * rng.uniform01() - 1.0) * limit;
    }
    state.g_w.push_back(RealMatrix(fan_out, fan_in));
    state.g_b.emplace_back(fan_out, 0.0);
    params.layers.push_back(std::move(layer));
  }
}

RealVector forward(const NetworkParams& params, const RealVector& input,
                   ForwardCache& cache) {
  check_network(params);
  forward_into(params, input, cache);
  return cache.activations.back();
}

RealVector forward(const NetworkParams& params, const RealVector& input) {
  ForwardCache cache;
  return forward(params, input, cache);
}

double loss(const NetworkParams& params,
            const std::vector<RealVector>& inputs,
            const std::vector<RealVector>& targets) {
  check_network(params);
  if (inputs.size() != targets.size()) {
    throw ShapeError("loss: " + std::to_string(inputs.size()) +
                     " inputs vs " + std::to_string(targets.size()) +
                     " targets");
  }
  double sum = 0.0;
  ForwardCache cache;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    forward_into(params, inputs[s], cache);
    const RealVector& out = cache.activations.back();
    if (targets[s].size() != out.size()) {
      throw ShapeError("loss: target " + std::to_string(s) + " has " +
                       std::to_string(targets[s].size()) +
                       " entries, expected " + std::to_string(out.size()));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = out[i] - targets[s][i];
      sum += d * d;
    }
  }
  return sum;
}

Gradients backward(const NetworkParams& params, const RealVector& input,
                   const RealVector& target, const ForwardCache& cache) {
  check_network(params);
  if (cache.activations.size() != params.layers.size() + 1) {
    throw StateError("backward: cache depth does not match the network");
  }
  if (!same_vector(cache.activations.front(), input)) {
    throw StateError("backward: cache was produced for a different input");
  }
  std::size_t dim = params.input_dim;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (cache.activations[l].size() != dim) {
      throw StateError("backward: cache layer " + std::to_string(l) +
                       " width does not match the network");
    }
    dim = params.layers[l].W.rows;
  }
  if (cache.activations.back().size() != dim) {
    throw StateError("backward: cache output width does not match the network");
  }
  Gradients grads;
  zero_gradients(params, grads);
  Workspace ws;
  accumulate_backward(params, target, cache, grads, ws);
  return grads;
}

Gradients batch_gradients(const NetworkParams& params,
                          const std::vector<RealVector>& inputs,
                          const std::vector<RealVector>& targets) {
  check_network(params);
  if (inputs.size() != targets.size()) {
    throw ShapeError("batch_gradients: " + std::to_string(inputs.size()) +
                     " inputs vs " + std::to_string(targets.size()) +
                     " targets");
  }
  Gradients grads;
  zero_gradients(params, grads);
  Workspace ws;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    forward_into(params, inputs[s], ws.cache);
    accumulate_backward(params, targets[s], ws.cache, grads, ws);
  }
  return grads;
}

void adagrad_step(NetworkParams& params, AdagradState& state,
                  const Gradients& grads, double learning_rate) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("adagrad_step: learning_rate must be positive");
  }
  if (grads.d_w.size() != params.layers.size() ||
      state.g_w.size() != params.layers.size()) {
    throw StateError("adagrad_step: gradient/state depth does not match");
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    LayerParams& layer = params.layers[l];
    const RealMatrix& dw = grads.d_w[l];
    const RealVector& db = grads.d_b[l];
    RealMatrix& gw = state.g_w[l];
    RealVector& gb = state.g_b[l];
    if (dw.rows != layer.W.rows || dw.cols != layer.W.cols ||
        db.size() != layer.b.size()) {
      throw StateError("adagrad_step: gradient shapes do not match layer " +
                       std::to_string(l));
    }
    for (std::size_t i = 0; i < layer.W.data.size(); ++i) {
      const double g = dw.data[i];
      gw.data[i] += g * g;
      layer.W.data[i] -=
          learning_rate * g / (std::sqrt(gw.data[i]) + state.epsilon);
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
      const double g = db[i];
      gb[i] += g * g;
      layer.b[i] -= learning_rate * g / (std::sqrt(gb[i]) + state.epsilon);
    }
  }
}

PairSplit split_pairs(std::size_t pair_count, double validation_fraction,
                      const Rng& rng) {
  if (pair_count < 2) {
    throw std::invalid_argument("split_pairs: need at least 2 pairs");
  }
  if (!(validation_fraction > 0.0) || !(validation_fraction < 1.0)) {
    throw std::invalid_argument(
        "split_pairs: validation_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(pair_count);
  for (std::size_t i = 0; i < pair_count; ++i) order[i] = i;
  Rng shuffle = rng.child("shuffle");
  for (std::size_t i = pair_count - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(
        shuffle.uniform01() * static_cast<double>(i + 1));
    std::swap(order[i], order[j]);
  }
  std::size_t n_val = static_cast<std::size_t>(
      std::llround(validation_fraction * static_cast<double>(pair_count)));
  n_val = std::clamp<std::size_t>(n_val, 1, pair_count - 1);
  PairSplit split;
  split.train.assign(order.begin(), order.end() - n_val);
  split.val.assign(order.end() - n_val, order.end());
  return split;
}

std::vector<std::size_t> default_layer_dims(NetworkMode mode, std::size_t M,
                                            std::size_t N,
                                            std::size_t hidden_width,
                                            std::size_t hidden_layers) {
  const std::size_t io = mode == NetworkMode::kPerUser ? 2 * M : 2 * M * N;
  std::vector<std::size_t> dims;
  dims.push_back(io);
  for (std::size_t l = 0; l < hidden_layers; ++l) dims.push_back(hidden_width);
  dims.push_back(io);
  return dims;
}

namespace {

// Per-net sample views of a dataset split.
struct SampleSet {
  std::vector<RealVector> inputs;
  std::vector<RealVector> targets;
};

SampleSet extract_samples(const CalibrationDataset& dataset,
                          const std::vector<std::size_t>& pair_indices,
                          NetworkMode mode, std::size_t net_index,
                          double target_scale) {
  SampleSet set;
  set.inputs.reserve(pair_indices.size());
  set.targets.reserve(pair_indices.size());
  for (std::size_t p : pair_indices) {
    if (p >= dataset.pairs.size()) {
      throw std::invalid_argument("train: split index " + std::to_string(p) +
                                  " outside the dataset");
    }
    const ChannelPair& pair = dataset.pairs[p];
    RealVector in, tgt;
    if (mode == NetworkMode::kPerUser) {
      in = encode_channels(pair.h_ul.col(net_index));
      tgt = encode_channels(pair.h_dl.row(net_index));
    } else {
      in = encode_channels(pair.h_ul);
      tgt = encode_channels(pair.h_dl);
    }
    if (target_scale != 1.0) {
      for (double& t : tgt) t *= target_scale;
    }
    set.inputs.push_back(std::move(in));
    set.targets.push_back(std::move(tgt));
  }
  return set;
}

void validate_train_config(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw std::invalid_argument("train: learning_rate must be positive");
  }
  if (config.epochs == 0) {
    throw std::invalid_argument("train: epochs must be >= 1");
  }
  if (config.batch_size == 0) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }
  if (config.output_activation == Activation::kTanh &&
      !(config.target_scale > 0.0)) {
    throw std::invalid_argument("train: target_scale must be positive");
  }
}

}  // namespace

TrainResult train_with_split(const CalibrationDataset& dataset,
                             const TrainConfig& config,
                             const PairSplit& split) {
  validate_train_config(config);
  const std::size_t M = dataset.M;
  const std::size_t N = dataset.N;
  if (M == 0 || N == 0 || dataset.pairs.empty()) {
    throw std::invalid_argument("train: dataset is empty");
  }
  if (split.train.empty() || split.val.empty()) {
    throw std::invalid_argument("train: both split halves must be nonempty");
  }

  std::vector<std::size_t> dims = config.layer_dims.empty()
                                      ? default_layer_dims(config.mode, M, N)
                                      : config.layer_dims;
  const std::size_t expected_io =
      config.mode == NetworkMode::kPerUser ? 2 * M : 2 * M * N;
  if (dims.front() != expected_io || dims.back() != expected_io) {
    throw std::invalid_argument(
        "train: layer_dims must start and end at " +
        std::to_string(expected_io) + " for this mode and channel shape");
  }

  const bool bounded = config.output_activation == Activation::kTanh;
  const double tscale = bounded ? config.target_scale : 1.0;
  const std::size_t net_count = config.mode == NetworkMode::kPerUser ? N : 1;

  TrainResult result;
  result.model.mode = config.mode;
  result.model.M = M;
  result.model.N = N;
  result.model.target_scale = tscale;
  result.model.nets.resize(net_count);

  std::vector<double> train_sum(config.epochs, 0.0);
  std::vector<double> val_sum(config.epochs, 0.0);
  const Rng root(config.seed);

  for (std::size_t k = 0; k < net_count; ++k) {
    const SampleSet train_set =
        extract_samples(dataset, split.train, config.mode, k, tscale);
    const SampleSet val_set =
        extract_samples(dataset, split.val, config.mode, k, tscale);

    const Rng net_rng = root.child("net", k);
    NetworkParams& params = result.model.nets[k];
    AdagradState state;
    Rng init_rng = net_rng.child("init");
    init_network(config, dims, init_rng, params, state);

    const std::size_t n_train = train_set.inputs.size();
    std::vector<std::size_t> order(n_train);
    std::vector<RealVector> batch_in, batch_tgt;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
      Rng shuffle = net_rng.child("epoch", epoch);
      for (std::size_t i = n_train - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(
            shuffle.uniform01() * static_cast<double>(i + 1));
        std::swap(order[i], order[j]);
      }
      for (std::size_t start = 0; start < n_train;
           start += config.batch_size) {
        const std::size_t stop =
            std::min(n_train, start + config.batch_size);
        batch_in.clear();
        batch_tgt.clear();
        for (std::size_t i = start; i < stop; ++i) {
          batch_in.push_back(train_set.inputs[order[i]]);
          batch_tgt.push_back(train_set.targets[order[i]]);
        }
        const Gradients grads = batch_gradients(params, batch_in, batch_tgt);
        adagrad_step(params, state, grads, config.learning_rate);
      }
      // Per-entry mean MSE in prediction space (undo the target scaling).
      const double denom_t = static_cast<double>(n_train) *
                             static_cast<double>(dims.back()) * tscale * tscale;
      const double denom_v = static_cast<double>(val_set.inputs.size()) *
                             static_cast<double>(dims.back()) * tscale * tscale;
      train_sum[epoch - 1] +=
          loss(params, train_set.inputs, train_set.targets) / denom_t;
      val_sum[epoch - 1] +=
          loss(params, val_set.inputs, val_set.targets) / denom_v;
    }
  }

  result.history.epochs.resize(config.epochs);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    result.history.epochs[e] = {
        e + 1, train_sum[e] / static_cast<double>(net_count),
        val_sum[e] / static_cast<double>(net_count)};
  }
  return result;
}

TrainResult train(const CalibrationDataset& dataset,
                  const TrainConfig& config) {
  const PairSplit split =
      split_pairs(dataset.pairs.size(), config.validation_fraction,
                  Rng(config.seed).child("split"));
  return train_with_split(dataset, config, split);
}

ComplexMatrix predict(const CalibrationModel& model,
                      const ComplexMatrix& h_ul) {
  if (h_ul.rows() != model.M || h_ul.cols() != model.N) {
    throw ShapeError("predict: h_ul is " + std::to_string(h_ul.rows()) + "x" +
                     std::to_string(h_ul.cols()) + " but the model expects " +
                     std::to_string(model.M) + "x" + std::to_string(model.N));
  }
  const double unscale = 1.0 / model.target_scale;
  if (model.mode == NetworkMode::kJoint) {
    if (model.nets.size() != 1) {
      throw StateError("predict: joint model must carry exactly one network");
    }
    RealVector out = forward(model.nets[0], encode_channels(h_ul));
    if (model.target_scale != 1.0) {
      for (double& v : out) v *= unscale;
    }
    return decode_channels(out, model.N, model.M);
  }
  if (model.nets.size() != model.N) {
    throw StateError("predict: per-user model must carry one network per user");
  }
  ComplexMatrix h_dl(model.N, model.M);
  for (std::size_t n = 0; n < model.N; ++n) {
    RealVector out = forward(model.nets[n], encode_channels(h_ul.col(n)));
    if (model.target_scale != 1.0) {
      for (double& v : out) v *= unscale;
    }
    h_dl.set_row(n, decode_channels(out, 1, model.M));
  }
  return h_dl;
}

}  // namespace mimocal
