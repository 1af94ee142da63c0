#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcs/losses.hpp"
#include "dcs/numerics.hpp"

namespace dcs {

enum class Activation { relu, tanh, identity };

Activation parse_activation(std::string_view name);
std::string to_string(Activation act);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::identity;
};

/*
 * Fully connected autoencoder h = decoder o encoder. layer_dims holds every
 * width from input to output (first == last == D); the encoder output is the
 * activation of the narrowest hidden layer. `version` increments on every
 * parameter update so stale forward caches can be detected.
 */
struct AEParams {
  std::vector<std::size_t> layer_dims;
  std::vector<Layer> layers;
  std::size_t code_layer = 0;
  std::uint64_t version = 0;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t code_dim() const { return layer_dims[code_layer + 1]; }
  bool all_finite() const;
  void validate() const;
};

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
// `activations` has one entry per layer.
AEParams init_autoencoder(const std::vector<std::size_t>& layer_dims,
                          const std::vector<Activation>& activations, RngStream& rng);
// Relu on hidden layers, identity on the output layer.
AEParams init_autoencoder(const std::vector<std::size_t>& layer_dims, RngStream& rng);
// Single identity layer D -> D; h(x) == x.
AEParams identity_autoencoder(std::size_t dim);

// Activations for a batch of column samples; valid only for the params
// (and version) that produced it.
struct ForwardCache {
  const AEParams* params = nullptr;
  std::uint64_t version = 0;
  std::vector<Matrix> activations;  // a_0 (input) ... a_L (output)
  std::vector<Matrix> pre_activations;  // z_1 ... z_L
};

struct ForwardResult {
  Matrix reconstruction;  // D x batch
  Matrix encoding;        // code_dim x batch
  ForwardCache cache;
};

struct SampleForward {
  Vector reconstruction;
  Vector encoding;
  ForwardCache cache;
};

// Inputs are columns. Throws DimensionError on a row-count mismatch.
ForwardResult forward(const AEParams& params, const Matrix& inputs);
SampleForward forward(const AEParams& params, const Vector& x);
SampleForward forward(const AEParams& params, const SignalVec& x);
// Reconstruction only; no cache kept.
Matrix reconstruct(const AEParams& params, const Matrix& inputs);
// Encoder output only.
Matrix encode(const AEParams& params, const Matrix& inputs);

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  static Gradients zeros_like(const AEParams& params);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  bool all_zero() const;
};

// Parameter gradients summed over the batch columns. grad_output is
// dLoss/dReconstruction, same shape as the reconstruction.
// Throws StaleCacheError when the cache came from other parameters.
Gradients backward(const AEParams& params, const ForwardCache& cache, const Matrix& grad_output);
Gradients backward(const AEParams& params, const ForwardCache& cache, const Vector& grad_output);

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string to_string(OptimizerKind kind);

// Optimizer hyperparameters plus Adam moments shaped like the parameters.
class OptimizerState {
 public:
  OptimizerState(const OptimizerConfig& config, const AEParams& params);

  void step(AEParams& params, const Gradients& grads);
  std::uint64_t step_count() const noexcept { return steps_; }
  const OptimizerConfig& config() const noexcept { return config_; }
  const Gradients& first_moment() const noexcept { return m_; }
  const Gradients& second_moment() const noexcept { return v_; }

 private:
  OptimizerConfig config_;
  Gradients m_;
  Gradients v_;
  std::uint64_t steps_ = 0;
};

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer;
  // Shuffle sample order every epoch.
  bool shuffle = true;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  AEParams params;
  std::vector<EpochLog> log;
};

/*
 * Mini-batch training on noisy samples only. Mask and k^ draws for sample i
 * in epoch e come from rng.split(e).split(i) keyed by the sample's original
 * index, so they do not depend on batch composition. Masked losses feed x~
 * to the network. Throws DivergenceError when parameters become non-finite.
 */
TrainResult train(AEParams params, std::span<const SignalVec> dataset, const LossConfig& loss,
                  const TrainConfig& config, const RngStream& rng);

struct ProbeConfig {
  int iterations = 500;
  double learning_rate = 0.1;
  double l2 = 1e-4;
};

/*
 * Linear evaluation: multinomial logistic regression on frozen codes (rows are
 * samples), trained by full-batch gradient descent on standardized features.
 * Returns test accuracy in percent. Throws ConfigError with fewer than two
 * classes in the training labels.
 */
double linear_probe(const Matrix& train_codes, const std::vector<int>& train_labels,
                    const Matrix& test_codes, const std::vector<int>& test_labels,
                    const ProbeConfig& config = {});

void save_checkpoint(const AEParams& params, const std::string& path);
AEParams load_checkpoint(const std::string& path);
std::string checkpoint_to_json(const AEParams& params);
AEParams checkpoint_from_json(const std::string& text);

}  // namespace dcs
