#include "dcs/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dcs/error.hpp"

namespace dcs {

namespace {

constexpr std::uint64_t kShuffleTag = 0x5348554646ull;  // "SHUFF"
constexpr std::uint64_t kSampleTag = 0x53414d504cull;   // "SAMPL"
constexpr int kCheckpointVersion = 1;

Matrix apply_activation(Activation act, const Matrix& z) {
  switch (act) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::identity: return z;
  }
  return z;
}

// dact/dz evaluated at z, times upstream gradient.
Matrix activation_backward(Activation act, const Matrix& z, const Matrix& upstream) {
  switch (act) {
    case Activation::relu:
      return (z.array() > 0.0).select(upstream, 0.0);
    case Activation::tanh: {
      const Eigen::ArrayXXd t = z.array().tanh();
      return (upstream.array() * (1.0 - t * t)).matrix();
    }
    case Activation::identity: return upstream;
  }
  return upstream;
}

std::size_t find_code_layer(const std::vector<std::size_t>& dims) {
  // Narrowest hidden width; a single-layer net uses its output.
  if (dims.size() <= 2) return 0;
  std::size_t best = 1;
  for (std::size_t i = 2; i + 1 < dims.size(); ++i) {
    if (dims[i] < dims[best]) best = i;
  }
  return best - 1;
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "unknown";
}

bool AEParams::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

void AEParams::validate() const {
  if (layer_dims.size() < 2) throw ConfigError("autoencoder: need at least one layer");
  if (layer_dims.front() != layer_dims.back()) {
    throw ConfigError("autoencoder: first and last widths must both equal D");
  }
  if (layers.size() + 1 != layer_dims.size()) throw ConfigError("autoencoder: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto rows = static_cast<Eigen::Index>(layer_dims[i + 1]);
    const auto cols = static_cast<Eigen::Index>(layer_dims[i]);
    if (layers[i].weight.rows() != rows || layers[i].weight.cols() != cols ||
        layers[i].bias.size() != rows) {
      throw DimensionError("autoencoder: layer " + std::to_string(i) + " has the wrong shape");
    }
  }
  if (code_layer >= layers.size()) throw ConfigError("autoencoder: code layer out of range");
}

AEParams init_autoencoder(const std::vector<std::size_t>& layer_dims,
                          const std::vector<Activation>& activations, RngStream& rng) {
  if (layer_dims.size() < 2) throw ConfigError("autoencoder: need at least one layer");
  if (activations.size() + 1 != layer_dims.size()) {
    throw ConfigError("autoencoder: need one activation per layer");
  }
  for (auto d : layer_dims) {
    if (d == 0) throw ConfigError("autoencoder: widths must be positive");
  }
  AEParams params;
  params.layer_dims = layer_dims;
  params.code_layer = find_code_layer(layer_dims);
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const auto fan_in = layer_dims[i];
    const auto fan_out = layer_dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Layer layer;
    layer.weight.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
    // Fill row-major so the draw order matches the checkpoint layout.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = limit * (2.0 * rng.uniform() - 1.0);
      }
    }
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(fan_out));
    layer.activation = activations[i];
    params.layers.push_back(std::move(layer));
  }
  params.validate();
  return params;
}

AEParams init_autoencoder(const std::vector<std::size_t>& layer_dims, RngStream& rng) {
  if (layer_dims.size() < 2) throw ConfigError("autoencoder: need at least one layer");
  std::vector<Activation> acts(layer_dims.size() - 1, Activation::relu);
  acts.back() = Activation::identity;
  return init_autoencoder(layer_dims, acts, rng);
}

AEParams identity_autoencoder(std::size_t dim) {
  AEParams params;
  params.layer_dims = {dim, dim};
  Layer layer;
  layer.weight = Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  layer.bias = Vector::Zero(static_cast<Eigen::Index>(dim));
  layer.activation = Activation::identity;
  params.layers.push_back(std::move(layer));
  params.validate();
  return params;
}

ForwardResult forward(const AEParams& params, const Matrix& inputs) {
  if (inputs.rows() != static_cast<Eigen::Index>(params.input_dim())) {
    throw DimensionError("forward: input has " + std::to_string(inputs.rows()) +
                         " rows, network expects " + std::to_string(params.input_dim()));
  }
  ForwardResult out;
  out.cache.params = &params;
  out.cache.version = params.version;
  out.cache.activations.reserve(params.layers.size() + 1);
  out.cache.pre_activations.reserve(params.layers.size());
  out.cache.activations.push_back(inputs);
  for (const auto& layer : params.layers) {
    Matrix z = layer.weight * out.cache.activations.back();
    z.colwise() += layer.bias;
    out.cache.activations.push_back(apply_activation(layer.activation, z));
    out.cache.pre_activations.push_back(std::move(z));
  }
  out.reconstruction = out.cache.activations.back();
  out.encoding = out.cache.activations[params.code_layer + 1];
  return out;
}

SampleForward forward(const AEParams& params, const Vector& x) {
  ForwardResult batch = forward(params, Matrix(x));
  return {batch.reconstruction.col(0), batch.encoding.col(0), std::move(batch.cache)};
}

SampleForward forward(const AEParams& params, const SignalVec& x) {
  return forward(params, x.values());
}

Matrix reconstruct(const AEParams& params, const Matrix& inputs) {
  return forward(params, inputs).reconstruction;
}

Matrix encode(const AEParams& params, const Matrix& inputs) {
  if (inputs.rows() != static_cast<Eigen::Index>(params.input_dim())) {
    throw DimensionError("encode: input dimension mismatch");
  }
  Matrix a = inputs;
  for (std::size_t i = 0; i <= params.code_layer; ++i) {
    const auto& layer = params.layers[i];
    Matrix z = layer.weight * a;
    z.colwise() += layer.bias;
    a = apply_activation(layer.activation, z);
  }
  return a;
}

Gradients Gradients::zeros_like(const AEParams& params) {
  Gradients g;
  for (const auto& layer : params.layers) {
    g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] *= s;
    bias[i] *= s;
  }
  return *this;
}

bool Gradients::all_zero() const {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (!weight[i].isZero(0.0) || !bias[i].isZero(0.0)) return false;
  }
  return true;
}

Gradients backward(const AEParams& params, const ForwardCache& cache, const Matrix& grad_output) {
  if (cache.params != &params || cache.version != params.version ||
      cache.activations.size() != params.layers.size() + 1) {
    throw StaleCacheError("backward: cache does not belong to these parameters");
  }
  const Matrix& out = cache.activations.back();
  if (grad_output.rows() != out.rows() || grad_output.cols() != out.cols()) {
    throw DimensionError("backward: upstream gradient shape mismatch");
  }
  Gradients grads = Gradients::zeros_like(params);
  Matrix upstream = grad_output;
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    const auto& layer = params.layers[i];
    const Matrix delta = activation_backward(layer.activation, cache.pre_activations[i], upstream);
    grads.weight[i] = delta * cache.activations[i].transpose();
    grads.bias[i] = delta.rowwise().sum();
    if (i > 0) upstream = layer.weight.transpose() * delta;
  }
  return grads;
}

Gradients backward(const AEParams& params, const ForwardCache& cache, const Vector& grad_output) {
  return backward(params, cache, Matrix(grad_output));
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerState::OptimizerState(const OptimizerConfig& config, const AEParams& params)
    : config_(config), m_(Gradients::zeros_like(params)), v_(Gradients::zeros_like(params)) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("optimizer: learning rate must be positive");
  if (config.kind == OptimizerKind::adam &&
      !(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0 &&
        config.epsilon > 0.0)) {
    throw ConfigError("optimizer: adam needs 0 <= beta < 1 and epsilon > 0");
  }
}

void OptimizerState::step(AEParams& params, const Gradients& grads) {
  if (grads.weight.size() != params.layers.size()) {
    throw DimensionError("optimizer: gradient layer count mismatch");
  }
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
      params.layers[i].weight -= lr * grads.weight[i];
      params.layers[i].bias -= lr * grads.bias[i];
    }
  } else {
    const double b1 = config_.beta1, b2 = config_.beta2, eps = config_.epsilon;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
      update(params.layers[i].weight, m_.weight[i], v_.weight[i], grads.weight[i]);
      update(params.layers[i].bias, m_.bias[i], v_.bias[i], grads.bias[i]);
    }
  }
  ++params.version;
}

TrainResult train(AEParams params, std::span<const SignalVec> dataset, const LossConfig& loss,
                  const TrainConfig& config, const RngStream& rng) {
  params.validate();
  if (dataset.empty()) throw ConfigError("train: dataset is empty");
  if (config.batch_size == 0) throw ConfigError("train: batch size must be >= 1");
  if (config.epochs < 0) throw ConfigError("train: epochs must be >= 0");
  const auto dim = static_cast<Eigen::Index>(params.input_dim());
  for (const auto& x : dataset) {
    if (static_cast<Eigen::Index>(x.dim()) != dim) throw DimensionError("train: sample dim mismatch");
  }

  OptimizerState optimizer(config.optimizer, params);
  TrainResult result;
  const RngStream shuffle_root = rng.split(kShuffleTag);
  const RngStream sample_root = rng.split(kSampleTag);
  std::vector<std::size_t> order(dataset.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle) {
      RngStream shuffle = shuffle_root.split(static_cast<std::uint64_t>(epoch));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle.uniform_index(i)]);
      }
    }
    const RngStream epoch_root = sample_root.split(static_cast<std::uint64_t>(epoch));
    double epoch_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t m = std::min(config.batch_size, order.size() - start);
      std::vector<PreparedSample> prepared;
      prepared.reserve(m);
      Matrix inputs(dim, static_cast<Eigen::Index>(m));
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t idx = order[start + j];
        RngStream sample_rng = epoch_root.split(idx);
        prepared.push_back(prepare_sample(sample_rng, dataset[idx], loss));
        inputs.col(static_cast<Eigen::Index>(j)) = prepared.back().network_input;
      }
      const ForwardResult fwd = forward(params, inputs);
      Matrix grad_out(dim, static_cast<Eigen::Index>(m));
      for (std::size_t j = 0; j < m; ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        const LossValue lv = evaluate_loss(prepared[j], dataset[order[start + j]],
                                           fwd.reconstruction.col(col), loss);
        epoch_sum += lv.value;
        grad_out.col(col) = lv.grad;
      }
      Gradients grads = backward(params, fwd.cache, grad_out);
      grads *= 1.0 / static_cast<double>(m);
      optimizer.step(params, grads);
      if (!params.all_finite()) {
        throw DivergenceError("train: non-finite parameters in epoch " + std::to_string(epoch),
                              epoch - 1);
      }
    }
    result.log.push_back({epoch, epoch_sum / static_cast<double>(dataset.size())});
  }
  result.params = std::move(params);
  return result;
}

double linear_probe(const Matrix& train_codes, const std::vector<int>& train_labels,
                    const Matrix& test_codes, const std::vector<int>& test_labels,
                    const ProbeConfig& config) {
  const auto n = train_codes.rows();
  const auto k = train_codes.cols();
  if (n == 0 || static_cast<std::size_t>(n) != train_labels.size()) {
    throw DimensionError("linear_probe: train codes and labels disagree");
  }
  if (static_cast<std::size_t>(test_codes.rows()) != test_labels.size() || test_codes.cols() != k) {
    throw DimensionError("linear_probe: test codes and labels disagree");
  }
  if (test_codes.rows() == 0) throw ConfigError("linear_probe: empty test set");
  for (int y : train_labels) {
    if (y < 0) throw ConfigError("linear_probe: labels must be nonnegative");
  }
  const int max_train = *std::max_element(train_labels.begin(), train_labels.end());
  const int min_train = *std::min_element(train_labels.begin(), train_labels.end());
  if (max_train == min_train) throw ConfigError("linear_probe: need at least two classes");
  int classes = max_train + 1;
  for (int y : test_labels) classes = std::max(classes, y + 1);

  // Standardize with training statistics; constant features become zero.
  const Eigen::RowVectorXd mean = train_codes.colwise().mean();
  Eigen::RowVectorXd scale =
      ((train_codes.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n))
          .sqrt();
  for (Eigen::Index j = 0; j < k; ++j) scale[j] = scale[j] > 1e-12 ? 1.0 / scale[j] : 0.0;
  const Matrix xtr = ((train_codes.rowwise() - mean).array().rowwise() * scale.array()).matrix();
  const Matrix xte = ((test_codes.rowwise() - mean).array().rowwise() * scale.array()).matrix();

  Matrix onehot = Matrix::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, train_labels[static_cast<std::size_t>(i)]) = 1.0;

  Matrix w = Matrix::Zero(k, classes);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(classes);
  auto softmax_rows = [](Matrix logits) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      logits.row(i).array() -= logits.row(i).maxCoeff();
      logits.row(i) = logits.row(i).array().exp().matrix();
      logits.row(i) /= logits.row(i).sum();
    }
    return logits;
  };
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int it = 0; it < config.iterations; ++it) {
    const Matrix p = softmax_rows((xtr * w).rowwise() + b);
    const Matrix residual = p - onehot;
    const Matrix gw = inv_n * (xtr.transpose() * residual) + config.l2 * w;
    const Eigen::RowVectorXd gb = inv_n * residual.colwise().sum();
    w -= config.learning_rate * gw;
    b -= config.learning_rate * gb;
  }

  const Matrix logits = (xte * w).rowwise() + b;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg;
    logits.row(i).maxCoeff(&arg);
    if (static_cast<int>(arg) == test_labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(logits.rows());
}

std::string checkpoint_to_json(const AEParams& params) {
  nlohmann::json j;
  j["format"] = "dcs-autoencoder";
  j["version"] = kCheckpointVersion;
  j["layer_dims"] = params.layer_dims;
  j["code_layer"] = params.code_layer;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : params.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    j["layers"].push_back({{"activation", to_string(layer.activation)},
                           {"weight", w},
                           {"bias", std::vector<double>(layer.bias.data(),
                                                        layer.bias.data() + layer.bias.size())}});
  }
  return j.dump();
}

AEParams checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  const auto format = j.find("format");
  if (!j.is_object() || format == j.end() || *format != "dcs-autoencoder") {
    throw ConfigError("checkpoint: unknown format");
  }
  const auto version = j.find("version");
  if (version == j.end() || *version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported version");
  }
  AEParams params;
  try {
    params.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    params.code_layer = j.at("code_layer").get<std::size_t>();
    const auto& layers = j.at("layers");
    if (layers.size() + 1 != params.layer_dims.size()) throw ConfigError("checkpoint: layer count");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto rows = static_cast<Eigen::Index>(params.layer_dims[i + 1]);
      const auto cols = static_cast<Eigen::Index>(params.layer_dims[i]);
      const auto w = layers[i].at("weight").get<std::vector<double>>();
      const auto b = layers[i].at("bias").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(rows * cols) ||
          b.size() != static_cast<std::size_t>(rows)) {
        throw DimensionError("checkpoint: layer " + std::to_string(i) + " has the wrong size");
      }
      Layer layer;
      layer.activation = parse_activation(layers[i].at("activation").get<std::string>());
      layer.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(w.data(), rows, cols);
      layer.bias = Eigen::Map<const Vector>(b.data(), rows);
      params.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed field: ") + e.what());
  }
  params.validate();
  return params;
}

void save_checkpoint(const AEParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(params) << '\n';
}

AEParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace dcs
