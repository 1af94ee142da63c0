#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcs/losses.hpp"
#include "dcs/masking.hpp"
#include "dcs/model.hpp"
#include "dcs/numerics.hpp"

namespace dcs {

/*
 * Full description of a desk-scale denoising experiment. The text form is
 * flat `key = value` lines ('#' starts a comment, lists are comma
 * separated); to_text/parse_experiment_config round-trip losslessly.
 * Every field has a default except `seeds` and `output`, which
 * validate() requires.
 */
struct ExperimentConfig {
  // Data: class templates are sums of Gaussian bumps on a height x width
  // grid; each sample re-renders its class template with jittered bump
  // centers and a random overall amplitude, clipped to [0, 1].
  std::size_t n_samples = 2000;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t classes = 4;
  std::size_t bumps_per_class = 3;
  double bump_width = 1.5;
  double position_jitter = 1.0;
  double amplitude_min = 0.6;
  double amplitude_max = 1.0;
  std::uint64_t template_seed = 0;
  std::string noise = "gaussian";  // gaussian | mixture
  std::vector<double> sigmas{0.5};
  double test_fraction = 0.25;

  MaskKind mask = MaskKind::blind_spot;
  double rho = 0.1;
  int patch_radius = 1;
  int delta = 2;

  std::vector<LossKind> losses{LossKind::mse, LossKind::cs, LossKind::n2v, LossKind::dcs};
  std::size_t weight_samples = kDefaultWeightSamples;
  double k_floor = kDefaultKFloor;
  double eta = kDefaultEta;

  std::vector<std::size_t> hidden_dims{64, 16, 64};
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::identity;

  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 100;
  std::size_t batch_size = 64;

  int probe_iterations = 500;
  double probe_learning_rate = 0.1;
  double probe_l2 = 1e-4;

  std::vector<std::uint64_t> seeds;
  std::string output;
  std::string checkpoint_dir;

  std::size_t dim() const noexcept { return height * width; }
  // Throws ConfigError on inconsistent or missing values.
  void validate() const;
};

// Throws ConfigError on unknown keys, malformed values or duplicate keys.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::string& path);
// Sets one field from its text form, as in a config line.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);
std::string to_text(const ExperimentConfig& config);
// 16 hex digits of a stable hash of to_text(config), ignoring output paths.
std::string config_hash(const ExperimentConfig& config);

std::string to_string(MaskKind kind);  // "bsm" | "tau-amn"
MaskKind parse_mask_kind(std::string_view name);

struct Dataset {
  std::vector<SignalVec> clean;  // evaluation only
  std::vector<SignalVec> noisy;
  std::vector<int> labels;
  std::vector<std::string> warnings;
};

// Clean class templates (mean amplitude, no jitter).
std::vector<Vector> class_templates(const ExperimentConfig& config);

// Labels are assigned round-robin. sigma == 0 gives noisy == clean.
Dataset generate_synthetic(const ExperimentConfig& config, double sigma, RngStream& rng);

struct CellResult {
  LossKind loss = LossKind::dcs;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double probe_accuracy = 0.0;
  double denoise_cosine = 0.0;
  double final_train_loss = 0.0;
  std::vector<EpochLog> log;
  std::optional<AEParams> params;
  std::string diagnostic;
};

struct TrainSplit {
  std::vector<SignalVec> train_noisy;
  std::vector<int> train_labels;
  std::vector<SignalVec> test_noisy;
  std::vector<SignalVec> test_clean;
  std::vector<int> test_labels;
};

// First (1 - test_fraction) of the samples train, the rest are held out.
TrainSplit split_dataset(const Dataset& data, double test_fraction);

LossConfig make_loss_config(const ExperimentConfig& config, LossKind kind);
TrainConfig make_train_config(const ExperimentConfig& config);
AEParams make_model(const ExperimentConfig& config, RngStream& rng);

// Trains one model on the noisy training split and evaluates it. Training
// never sees clean signals; divergence yields NaN metrics and a diagnostic.
CellResult run_cell(const ExperimentConfig& config, LossKind loss, double sigma, std::uint64_t seed,
                    const Dataset& data);
// Same, generating the dataset for (sigma, seed) first.
CellResult run_cell(const ExperimentConfig& config, LossKind loss, double sigma, std::uint64_t seed);

// Data stream for a (sigma, seed) cell; shared by every loss in the cell.
RngStream data_stream(std::uint64_t seed, double sigma);

struct ResultRow {
  std::string loss;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string metric;  // probe_accuracy | denoise_cosine | final_train_loss
  double value = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // sorted by (loss, sigma, seed, metric)
  std::vector<CellResult> cells;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// "# config_hash=<hash>" line, column header, then one row per metric with
// 17 significant digits.
std::string format_results_csv(const std::vector<ResultRow>& rows, const ExperimentConfig& config);

// Headerless numeric CSV, one sample per row. Lines starting with '#' and
// blank lines are skipped. Throws ConfigError on malformed numbers.
std::vector<std::vector<double>> read_csv(const std::string& path);
std::vector<std::vector<double>> parse_csv(std::string_view text);
std::string format_csv(const std::vector<std::vector<double>>& rows);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);
std::string format_double(double v);  // 17 significant digits

// h(x) per row; with `rescale`, each output row is min-max mapped to [0, 1]
// (a constant row maps to all zeros). Throws DimensionError on a width mismatch.
std::vector<std::vector<double>> denoise(const AEParams& params,
                                         const std::vector<std::vector<double>>& rows,
                                         bool rescale);

}  // namespace dcs
