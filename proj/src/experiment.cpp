#include "dcs/experiment.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "dcs/error.hpp"

namespace dcs {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::string_view key) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config '" + std::string(key) + "': expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view s, std::string_view key) {
  s = trim(s);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config '" + std::string(key) + "': expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

// Shortest decimal form that reads back to the same double.
std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += fmt(items[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define DCS_SIZE_FIELD(name)                                                                   \
  Field{#name, [](ExperimentConfig& c, std::string_view v) { c.name = parse_int<std::size_t>(v, #name); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }}
#define DCS_INT_FIELD(name)                                                                    \
  Field{#name, [](ExperimentConfig& c, std::string_view v) { c.name = parse_int<int>(v, #name); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }}
#define DCS_DOUBLE_FIELD(name)                                                                 \
  Field{#name, [](ExperimentConfig& c, std::string_view v) { c.name = parse_double(v, #name); }, \
        [](const ExperimentConfig& c) { return shortest(c.name); }}
#define DCS_STRING_FIELD(name)                                                                 \
  Field{#name, [](ExperimentConfig& c, std::string_view v) { c.name = std::string(trim(v)); }, \
        [](const ExperimentConfig& c) { return c.name; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      DCS_SIZE_FIELD(n_samples),
      DCS_SIZE_FIELD(height),
      DCS_SIZE_FIELD(width),
      DCS_SIZE_FIELD(classes),
      DCS_SIZE_FIELD(bumps_per_class),
      DCS_DOUBLE_FIELD(bump_width),
      DCS_DOUBLE_FIELD(position_jitter),
      DCS_DOUBLE_FIELD(amplitude_min),
      DCS_DOUBLE_FIELD(amplitude_max),
      Field{"template_seed",
            [](ExperimentConfig& c, std::string_view v) {
              c.template_seed = parse_int<std::uint64_t>(v, "template_seed");
            },
            [](const ExperimentConfig& c) { return std::to_string(c.template_seed); }},
      DCS_STRING_FIELD(noise),
      Field{"sigmas",
            [](ExperimentConfig& c, std::string_view v) {
              c.sigmas.clear();
              for (auto item : split_list(v)) c.sigmas.push_back(parse_double(item, "sigmas"));
            },
            [](const ExperimentConfig& c) { return join(c.sigmas, shortest); }},
      DCS_DOUBLE_FIELD(test_fraction),
      Field{"mask", [](ExperimentConfig& c, std::string_view v) { c.mask = parse_mask_kind(trim(v)); },
            [](const ExperimentConfig& c) { return to_string(c.mask); }},
      DCS_DOUBLE_FIELD(rho),
      DCS_INT_FIELD(patch_radius),
      DCS_INT_FIELD(delta),
      Field{"losses",
            [](ExperimentConfig& c, std::string_view v) {
              c.losses.clear();
              for (auto item : split_list(v)) c.losses.push_back(parse_loss_kind(item));
            },
            [](const ExperimentConfig& c) {
              return join(c.losses, [](LossKind k) { return to_string(k); });
            }},
      DCS_SIZE_FIELD(weight_samples),
      DCS_DOUBLE_FIELD(k_floor),
      DCS_DOUBLE_FIELD(eta),
      Field{"hidden_dims",
            [](ExperimentConfig& c, std::string_view v) {
              c.hidden_dims.clear();
              for (auto item : split_list(v)) c.hidden_dims.push_back(parse_int<std::size_t>(item, "hidden_dims"));
            },
            [](const ExperimentConfig& c) {
              return join(c.hidden_dims, [](std::size_t d) { return std::to_string(d); });
            }},
      Field{"hidden_activation",
            [](ExperimentConfig& c, std::string_view v) { c.hidden_activation = parse_activation(trim(v)); },
            [](const ExperimentConfig& c) { return to_string(c.hidden_activation); }},
      Field{"output_activation",
            [](ExperimentConfig& c, std::string_view v) { c.output_activation = parse_activation(trim(v)); },
            [](const ExperimentConfig& c) { return to_string(c.output_activation); }},
      Field{"optimizer",
            [](ExperimentConfig& c, std::string_view v) { c.optimizer = parse_optimizer_kind(trim(v)); },
            [](const ExperimentConfig& c) { return to_string(c.optimizer); }},
      DCS_DOUBLE_FIELD(learning_rate),
      DCS_DOUBLE_FIELD(beta1),
      DCS_DOUBLE_FIELD(beta2),
      DCS_DOUBLE_FIELD(adam_epsilon),
      DCS_INT_FIELD(epochs),
      DCS_SIZE_FIELD(batch_size),
      DCS_INT_FIELD(probe_iterations),
      DCS_DOUBLE_FIELD(probe_learning_rate),
      DCS_DOUBLE_FIELD(probe_l2),
      Field{"seeds",
            [](ExperimentConfig& c, std::string_view v) {
              c.seeds.clear();
              for (auto item : split_list(v)) c.seeds.push_back(parse_int<std::uint64_t>(item, "seeds"));
            },
            [](const ExperimentConfig& c) {
              return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
            }},
      DCS_STRING_FIELD(output),
      DCS_STRING_FIELD(checkpoint_dir),
  };
  return table;
}

#undef DCS_SIZE_FIELD
#undef DCS_INT_FIELD
#undef DCS_DOUBLE_FIELD
#undef DCS_STRING_FIELD

double gaussian_bump(double r2, double width) { return std::exp(-r2 / (2.0 * width * width)); }

struct Bump {
  double row, col, height;
};

std::vector<std::vector<Bump>> template_bumps(const ExperimentConfig& config) {
  RngStream rng(config.template_seed, fnv1a64("templates"));
  const double h = static_cast<double>(config.height);
  const double w = static_cast<double>(config.width);
  // Keep bump centers one width away from the border where the grid allows.
  const double margin_r = std::min(config.bump_width, 0.25 * h);
  const double margin_c = std::min(config.bump_width, 0.25 * w);
  std::vector<std::vector<Bump>> out(config.classes);
  for (auto& bumps : out) {
    for (std::size_t j = 0; j < config.bumps_per_class; ++j) {
      const double r = margin_r + rng.uniform() * (h - 1.0 - 2.0 * margin_r);
      const double c = margin_c + rng.uniform() * (w - 1.0 - 2.0 * margin_c);
      bumps.push_back({r, c, 0.5 + 0.5 * rng.uniform()});
    }
  }
  return out;
}

Vector render(const ExperimentConfig& config, const std::vector<Bump>& bumps, double amplitude,
              const std::vector<std::pair<double, double>>& shifts) {
  Vector s = Vector::Zero(static_cast<Eigen::Index>(config.dim()));
  for (std::size_t r = 0; r < config.height; ++r) {
    for (std::size_t c = 0; c < config.width; ++c) {
      double v = 0.0;
      for (std::size_t j = 0; j < bumps.size(); ++j) {
        const double dr = static_cast<double>(r) - bumps[j].row - shifts[j].first;
        const double dc = static_cast<double>(c) - bumps[j].col - shifts[j].second;
        v += bumps[j].height * gaussian_bump(dr * dr + dc * dc, config.bump_width);
      }
      s[static_cast<Eigen::Index>(r * config.width + c)] = std::clamp(amplitude * v, 0.0, 1.0);
    }
  }
  return s;
}

NoiseSpec noise_spec(const ExperimentConfig& config, double sigma) {
  if (config.noise == "gaussian") return NoiseSpec::gaussian(sigma);
  if (config.noise != "mixture") throw ConfigError("unknown noise kind '" + config.noise + "'");
  // Two equally likely scales with E[S^2] = sigma^2.
  return NoiseSpec::scale_mixture(
      sigma, {{sigma * std::sqrt(0.5), 0.5}, {sigma * std::sqrt(1.5), 0.5}});
}

}  // namespace

std::string to_string(MaskKind kind) { return kind == MaskKind::blind_spot ? "bsm" : "tau-amn"; }

MaskKind parse_mask_kind(std::string_view name) {
  if (name == "bsm") return MaskKind::blind_spot;
  if (name == "tau-amn") return MaskKind::tau_amn;
  throw ConfigError("unknown mask kind '" + std::string(name) + "' (expected bsm or tau-amn)");
}

void ExperimentConfig::validate() const {
  if (height == 0 || width == 0 || dim() < 4) throw ConfigError("config: need D = height * width >= 4");
  if (classes < 2) throw ConfigError("config: need at least 2 classes");
  if (n_samples < 2 * classes) throw ConfigError("config: n_samples too small for the class count");
  if (bumps_per_class == 0) throw ConfigError("config: bumps_per_class must be >= 1");
  if (!(bump_width > 0.0)) throw ConfigError("config: bump_width must be positive");
  if (!(position_jitter >= 0.0)) throw ConfigError("config: position_jitter must be >= 0");
  if (!(amplitude_min > 0.0) || amplitude_max < amplitude_min) {
    throw ConfigError("config: need 0 < amplitude_min <= amplitude_max");
  }
  if (noise != "gaussian" && noise != "mixture") {
    throw ConfigError("config: noise must be gaussian or mixture");
  }
  if (sigmas.empty()) throw ConfigError("config: sigmas must be nonempty");
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("config: sigmas must be finite and >= 0");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("config: test_fraction must lie in (0, 1)");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("config: rho must lie in (0, 1)");
  if (patch_radius < 1) throw ConfigError("config: patch_radius must be >= 1");
  if (delta < 1) throw ConfigError("config: delta must be >= 1");
  if (losses.empty()) throw ConfigError("config: losses must be nonempty");
  if (weight_samples == 0) throw ConfigError("config: weight_samples must be >= 1");
  if (!(k_floor > 0.0)) throw ConfigError("config: k_floor must be positive");
  if (!(eta > 0.0)) throw ConfigError("config: eta must be positive");
  if (hidden_dims.empty()) throw ConfigError("config: hidden_dims must be nonempty");
  for (auto d : hidden_dims) {
    if (d == 0) throw ConfigError("config: hidden_dims entries must be positive");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be positive");
  if (epochs < 0) throw ConfigError("config: epochs must be >= 0");
  if (batch_size == 0) throw ConfigError("config: batch_size must be >= 1");
  if (probe_iterations < 0) throw ConfigError("config: probe_iterations must be >= 0");
  if (seeds.empty()) throw ConfigError("config: seeds is required");
  if (output.empty()) throw ConfigError("config: output is required");
}

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    set_config_value(config, key, line.substr(eq + 1));
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_text_file(path));
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  ExperimentConfig keyed = config;
  keyed.output.clear();
  keyed.checkpoint_dir.clear();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(to_text(keyed))));
  return buf;
}

std::vector<Vector> class_templates(const ExperimentConfig& config) {
  const auto bumps = template_bumps(config);
  const double amplitude = 0.5 * (config.amplitude_min + config.amplitude_max);
  std::vector<Vector> out;
  for (const auto& b : bumps) {
    out.push_back(render(config, b, amplitude, std::vector<std::pair<double, double>>(b.size(), {0.0, 0.0})));
  }
  return out;
}

Dataset generate_synthetic(const ExperimentConfig& config, double sigma, RngStream& rng) {
  if (config.dim() < 4) throw ConfigError("generate_synthetic: need D >= 4");
  if (config.classes < 2) throw ConfigError("generate_synthetic: need at least 2 classes");
  if (!(sigma >= 0.0)) throw ConfigError("generate_synthetic: sigma must be >= 0");
  if (config.noise != "gaussian" && config.noise != "mixture") {
    throw ConfigError("generate_synthetic: unknown noise kind '" + config.noise + "'");
  }
  const auto bumps = template_bumps(config);
  const auto templates = class_templates(config);
  const std::optional<NoiseSpec> noise =
      sigma > 0.0 ? std::optional<NoiseSpec>(noise_spec(config, sigma)) : std::nullopt;

  Dataset data;
  data.clean.reserve(config.n_samples);
  data.noisy.reserve(config.n_samples);
  double spread_sq = 0.0;
  Vector eps(static_cast<Eigen::Index>(config.dim()));
  for (std::size_t i = 0; i < config.n_samples; ++i) {
    const int label = static_cast<int>(i % config.classes);
    const auto& b = bumps[static_cast<std::size_t>(label)];
    const double amplitude =
        config.amplitude_min + (config.amplitude_max - config.amplitude_min) * rng.uniform();
    std::vector<std::pair<double, double>> shifts;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double dr = config.position_jitter * rng.normal();
      const double dc = config.position_jitter * rng.normal();
      shifts.emplace_back(dr, dc);
    }
    Vector s = render(config, b, amplitude, shifts);
    spread_sq += (s - templates[static_cast<std::size_t>(label)]).squaredNorm();
    Vector x = s;
    if (noise) {
      fill_isotropic_noise(rng, *noise, eps);
      x += eps;
    }
    data.clean.emplace_back(std::move(s));
    data.noisy.emplace_back(std::move(x));
    data.labels.push_back(label);
  }

  double separation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < templates.size(); ++i) {
    for (std::size_t j = i + 1; j < templates.size(); ++j) {
      separation = std::min(separation, (templates[i] - templates[j]).norm());
    }
  }
  const double spread = std::sqrt(spread_sq / static_cast<double>(config.n_samples));
  if (separation < 3.0 * spread) {
    data.warnings.push_back("class templates are " + shortest(separation) +
                            " apart, below 3x the within-class spread " + shortest(spread));
  }
  return data;
}

TrainSplit split_dataset(const Dataset& data, double test_fraction) {
  const std::size_t n = data.noisy.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) throw ConfigError("split_dataset: empty train or test split");
  const std::size_t n_train = n - n_test;
  TrainSplit out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      out.train_noisy.push_back(data.noisy[i]);
      out.train_labels.push_back(data.labels[i]);
    } else {
      out.test_noisy.push_back(data.noisy[i]);
      out.test_clean.push_back(data.clean[i]);
      out.test_labels.push_back(data.labels[i]);
    }
  }
  return out;
}

LossConfig make_loss_config(const ExperimentConfig& config, LossKind kind) {
  LossConfig loss;
  loss.kind = kind;
  loss.mask_kind = config.mask;
  loss.grid = GridShape::image(config.height, config.width);
  loss.rho = config.rho;
  loss.patch_radius = config.patch_radius;
  loss.delta = config.delta;
  loss.weight_samples = config.weight_samples;
  loss.k_floor = config.k_floor;
  loss.eta = config.eta;
  return loss;
}

TrainConfig make_train_config(const ExperimentConfig& config) {
  TrainConfig train;
  train.epochs = config.epochs;
  train.batch_size = config.batch_size;
  train.optimizer.kind = config.optimizer;
  train.optimizer.learning_rate = config.learning_rate;
  train.optimizer.beta1 = config.beta1;
  train.optimizer.beta2 = config.beta2;
  train.optimizer.epsilon = config.adam_epsilon;
  return train;
}

AEParams make_model(const ExperimentConfig& config, RngStream& rng) {
  std::vector<std::size_t> dims{config.dim()};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(config.dim());
  std::vector<Activation> acts(dims.size() - 1, config.hidden_activation);
  acts.back() = config.output_activation;
  return init_autoencoder(dims, acts, rng);
}

RngStream data_stream(std::uint64_t seed, double sigma) {
  return RngStream(seed, fnv1a64("data")).split(std::bit_cast<std::uint64_t>(sigma));
}

namespace {

Matrix as_columns(const std::vector<SignalVec>& xs) {
  Matrix m(static_cast<Eigen::Index>(xs.front().dim()), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = xs[i].values();
  return m;
}

}  // namespace

CellResult run_cell(const ExperimentConfig& config, LossKind loss, double sigma, std::uint64_t seed,
                    const Dataset& data) {
  CellResult cell;
  cell.loss = loss;
  cell.sigma = sigma;
  cell.seed = seed;
  const TrainSplit split = split_dataset(data, config.test_fraction);

  RngStream init_rng(seed, fnv1a64("init"));
  AEParams params = make_model(config, init_rng);
  const RngStream train_rng(seed, fnv1a64("train"));
  try {
    TrainResult trained = train(std::move(params), split.train_noisy, make_loss_config(config, loss),
                                make_train_config(config), train_rng);
    params = std::move(trained.params);
    cell.log = std::move(trained.log);
  } catch (const DivergenceError& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cell.probe_accuracy = cell.denoise_cosine = cell.final_train_loss = nan;
    cell.diagnostic = std::string(e.what()) + "; last good epoch " + std::to_string(e.last_good_epoch());
    return cell;
  }
  cell.final_train_loss =
      cell.log.empty() ? std::numeric_limits<double>::quiet_NaN() : cell.log.back().mean_loss;

  const Matrix train_x = as_columns(split.train_noisy);
  const Matrix test_x = as_columns(split.test_noisy);
  ProbeConfig probe;
  probe.iterations = config.probe_iterations;
  probe.learning_rate = config.probe_learning_rate;
  probe.l2 = config.probe_l2;
  cell.probe_accuracy = linear_probe(encode(params, train_x).transpose(), split.train_labels,
                                     encode(params, test_x).transpose(), split.test_labels, probe);

  const Matrix recon = reconstruct(params, test_x);
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < split.test_clean.size(); ++i) {
    const Vector r = recon.col(static_cast<Eigen::Index>(i));
    const Vector& s = split.test_clean[i].values();
    cos_sum += r.dot(s) / std::max(r.norm() * s.norm(), config.eta);
  }
  cell.denoise_cosine = cos_sum / static_cast<double>(split.test_clean.size());
  cell.params = std::move(params);
  return cell;
}

CellResult run_cell(const ExperimentConfig& config, LossKind loss, double sigma, std::uint64_t seed) {
  RngStream rng = data_stream(seed, sigma);
  return run_cell(config, loss, sigma, seed, generate_synthetic(config, sigma, rng));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  for (double sigma : config.sigmas) {
    for (std::uint64_t seed : config.seeds) {
      RngStream rng = data_stream(seed, sigma);
      const Dataset data = generate_synthetic(config, sigma, rng);
      for (LossKind loss : config.losses) {
        result.cells.push_back(run_cell(config, loss, sigma, seed, data));
        const CellResult& cell = result.cells.back();
        if (!config.checkpoint_dir.empty() && cell.params) {
          save_checkpoint(*cell.params, config.checkpoint_dir + "/" + to_string(loss) + "_sigma" +
                                            format_double(sigma) + "_seed" + std::to_string(seed) + ".json");
        }
      }
    }
  }
  for (const auto& cell : result.cells) {
    const std::string name = to_string(cell.loss);
    result.rows.push_back({name, cell.sigma, cell.seed, "denoise_cosine", cell.denoise_cosine});
    result.rows.push_back({name, cell.sigma, cell.seed, "final_train_loss", cell.final_train_loss});
    result.rows.push_back({name, cell.sigma, cell.seed, "probe_accuracy", cell.probe_accuracy});
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.loss, a.sigma, a.seed, a.metric) < std::tie(b.loss, b.sigma, b.seed, b.metric);
  });
  return result;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_results_csv(const std::vector<ResultRow>& rows, const ExperimentConfig& config) {
  std::string out = "# config_hash=" + config_hash(config) + "\n";
  out += "loss,sigma,seed,metric,value\n";
  for (const auto& r : rows) {
    out += r.loss + "," + format_double(r.sigma) + "," + std::to_string(r.seed) + "," + r.metric + "," +
           format_double(r.value) + "\n";
  }
  return out;
}

std::vector<std::vector<double>> parse_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    for (auto item : split_list(line)) {
      try {
        row.push_back(parse_double(item, "csv"));
      } catch (const ConfigError&) {
        throw ConfigError("csv line " + std::to_string(line_no) + ": bad number '" + std::string(item) + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<double>> read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

std::string format_csv(const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += format_double(row[i]);
    }
    out += "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> denoise(const AEParams& params,
                                         const std::vector<std::vector<double>>& rows, bool rescale) {
  const std::size_t dim = params.input_dim();
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw DimensionError("denoise: row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                           " values, checkpoint expects " + std::to_string(dim));
    }
    const Vector x = Eigen::Map<const Vector>(rows[i].data(), static_cast<Eigen::Index>(dim));
    Vector y = reconstruct(params, Matrix(x)).col(0);
    if (rescale) {
      const double lo = y.minCoeff();
      const double hi = y.maxCoeff();
      if (hi > lo) {
        y = (y.array() - lo) / (hi - lo);
      } else {
        y.setZero();
      }
    }
    out.emplace_back(y.data(), y.data() + y.size());
  }
  return out;
}

}  // namespace dcs
