// From-scratch feed-forward network mapping uplink channel estimates to
// downlink predictions: real-valued MLP with tanh hidden layers, explicit
// backprop, and Adagrad updates. No autodiff, no BLAS; every kernel here is
// part of the artifact's contract and is tested against finite differences.
#ifndef MIMOCAL_CALINET_HPP
#define MIMOCAL_CALINET_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mimocal/channel_sim.hpp"
#include "mimocal/complex_matrix.hpp"
#include "mimocal/rng.hpp"

namespace mimocal {

// Minimal row-major real matrix; the network's only linear-algebra carrier.
struct RealMatrix {
  RealMatrix() : rows(0), cols(0) {}
  RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const double& operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  std::size_t rows, cols;
  std::vector<double> data;
};

using RealVector = std::vector<double>;

enum class Activation { kTanh, kLinear };

struct LayerParams {
  RealMatrix W;       // out_dim x in_dim
  RealVector b;       // out_dim
  Activation activation = Activation::kTanh;
};

struct NetworkParams {
  std::vector<LayerParams> layers;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
};

// Per-parameter squared-gradient accumulators, shapes mirroring the network.
struct AdagradState {
  std::vector<RealMatrix> g_w;
  std::vector<RealVector> g_b;
  double epsilon = 1e-8;
};

// Gradient container; same shapes as AdagradState accumulators.
struct Gradients {
  std::vector<RealMatrix> d_w;
  std::vector<RealVector> d_b;
};

enum class NetworkMode { kPerUser, kJoint };

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 256;
  std::size_t batch_size = 4;
  double validation_fraction = 0.4;
  std::uint64_t seed = 1;
  // Full dimension chain including input and output; empty means "derive
  // from mode and channel shape with three hidden layers of width 128".
  std::vector<std::size_t> layer_dims;
  NetworkMode mode = NetworkMode::kPerUser;
  Activation output_activation = Activation::kLinear;
  // Target pre-scaling for the bounded-output configuration; ignored when
  // the output layer is linear.
  double target_scale = 1.0 / 3.0;
};

struct TrainHistory {
  struct Epoch {
    std::size_t epoch;   // 1-based
    double train_mse;    // per-entry mean over the training split
    double val_mse;      // per-entry mean over the validation split
  };
  std::vector<Epoch> epochs;
};

// Layer activations r_0 (input) .. r_L (output) of one forward evaluation.
struct ForwardCache {
  std::vector<RealVector> activations;
};

// Channel matrix in, interleaved reals out: entries in row-major order,
// each contributing (re, im). Length 2 * rows * cols. decode is exact.
RealVector encode_channels(const ComplexMatrix& h);
ComplexMatrix decode_channels(const RealVector& v, std::size_t rows,
                              std::size_t cols);

// Glorot-uniform weights (+/- sqrt(6/(fan_in+fan_out))), zero biases, zero
// Adagrad accumulators. All layers tanh except the last, which follows
// config.output_activation.
void init_network(const TrainConfig& config,
                  const std::vector<std::size_t>& layer_dims, Rng& rng,
                  NetworkParams& params, AdagradState& state);

// Forward pass caching every layer's activation.
RealVector forward(const NetworkParams& params, const RealVector& input,
                   ForwardCache& cache);
RealVector forward(const NetworkParams& params, const RealVector& input);

// Sum over the batch of squared output errors (no normalization).
double loss(const NetworkParams& params,
            const std::vector<RealVector>& inputs,
            const std::vector<RealVector>& targets);

// Backprop of d(sum of squared errors)/d(params) for one sample whose
// forward pass produced `cache`. A cache that does not match params/input
// is rejected (StateError).
Gradients backward(const NetworkParams& params, const RealVector& input,
                   const RealVector& target, const ForwardCache& cache);

// Sum of per-sample gradients over a batch.
Gradients batch_gradients(const NetworkParams& params,
                          const std::vector<RealVector>& inputs,
                          const std::vector<RealVector>& targets);

// Adagrad: G += g^2; theta -= lr * g / (sqrt(G) + eps). In-place.
void adagrad_step(NetworkParams& params, AdagradState& state,
                  const Gradients& grads, double learning_rate);

// Trained calibration model: one network per user (per-user mode) or a
// single joint network. Networks share architecture and config.
struct CalibrationModel {
  NetworkMode mode = NetworkMode::kPerUser;
  std::size_t M = 0;
  std::size_t N = 0;
  double target_scale = 1.0;  // applied iff output activation is tanh
  std::vector<NetworkParams> nets;
};

struct TrainResult {
  CalibrationModel model;
  TrainHistory history;
};

// Index split of a dataset's pairs: seeded shuffle, first (1 - vf) train.
struct PairSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};
PairSplit split_pairs(std::size_t pair_count, double validation_fraction,
                      const Rng& rng);

// Trains on the dataset's own seeded split (train half) while reporting
// per-epoch MSE on both halves. Histories average over the per-user nets.
TrainResult train(const CalibrationDataset& dataset, const TrainConfig& config);

// Same, with an externally supplied pair split (the harness shares one
// split between the network and the baseline fits).
TrainResult train_with_split(const CalibrationDataset& dataset,
                             const TrainConfig& config,
                             const PairSplit& split);

// N x M downlink prediction for one uplink estimate.
ComplexMatrix predict(const CalibrationModel& model,
                      const ComplexMatrix& h_ul);

// Dimension chain implied by mode and channel shape (hidden widths given).
std::vector<std::size_t> default_layer_dims(NetworkMode mode, std::size_t M,
                                            std::size_t N,
                                            std::size_t hidden_width = 128,
                                            std::size_t hidden_layers = 3);

}  // namespace mimocal

#endif  // MIMOCAL_CALINET_HPP
