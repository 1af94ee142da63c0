// dcs: command-line front end for the denoising cosine-similarity library.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcs/error.hpp"
#include "dcs/experiment.hpp"
#include "dcs/losses.hpp"
#include "dcs/masking.hpp"
#include "dcs/model.hpp"
#include "dcs/verify.hpp"
#include "dcs/weights.hpp"

namespace {

constexpr const char* kSeedEnv = "DCS_SEED";

std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return 0;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw dcs::ConfigError(std::string(kSeedEnv) + " is not an unsigned integer: '" + env + "'");
  }
}

std::vector<double> read_column(const std::string& path) {
  std::vector<double> out;
  for (const auto& row : dcs::read_csv(path)) {
    if (row.size() != 1) throw dcs::ConfigError(path + ": expected one value per line");
    out.push_back(row[0]);
  }
  if (out.empty()) throw dcs::ConfigError(path + ": no values");
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    dcs::write_text_file(path, text);
  }
}

struct EstimateArgs {
  std::string x_path, x_tilde_path, mask_path, out;
  std::size_t samples = dcs::kDefaultWeightSamples;
  std::optional<std::uint64_t> seed;
};

int run_estimate(const EstimateArgs& a) {
  const auto xs = read_column(a.x_path);
  const auto xts = read_column(a.x_tilde_path);
  if (xs.size() != xts.size()) throw dcs::DimensionError("estimate: x and x_tilde differ in length");
  dcs::Vector xv = Eigen::Map<const dcs::Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  dcs::Vector xtv = Eigen::Map<const dcs::Vector>(xts.data(), static_cast<Eigen::Index>(xts.size()));
  if (!a.mask_path.empty()) {
    const auto bits = read_column(a.mask_path);
    if (bits.size() != xs.size()) throw dcs::DimensionError("estimate: mask length differs from x");
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] != 0.0 && bits[i] != 1.0) throw dcs::ConfigError("estimate: mask entries must be 0 or 1");
      if (bits[i] == 1.0) support.push_back(i);
    }
    xv = dcs::gather(xv, support);
    xtv = dcs::gather(xtv, support);
  }
  const double c_hat = dcs::estimate_c(xv, xtv);
  dcs::RngStream rng(a.seed.value_or(default_seed()), dcs::fnv1a64("estimate"));
  const auto dim = static_cast<std::size_t>(xv.size());
  const dcs::WeightEstimate w = dcs::estimate_k_mc(rng, c_hat, dim, a.samples);
  const nlohmann::json out{{"c_hat", c_hat},         {"k_hat", w.k_hat},
                           {"std_error", w.std_error}, {"n_samples", w.n_samples},
                           {"dim", dim},              {"k_closed_form", dcs::k_closed_form(c_hat)}};
  emit(out.dump(2) + "\n", a.out);
  return 0;
}

struct VerifyArgs {
  std::string check = "all";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config_path;
};

int run_verify(const VerifyArgs& a) {
  std::vector<dcs::VerificationReport> reports;
  if (!a.config_path.empty()) {
    if (a.check == "all") throw dcs::ConfigError("verify: --config needs a single --check id");
    nlohmann::json config = nlohmann::json::parse(dcs::read_text_file(a.config_path));
    if (a.seed) config["seed"] = *a.seed;
    reports = dcs::run_check(a.check, config);
  } else {
    reports = dcs::run_checks(a.check, a.seed.value_or(default_seed()));
  }
  for (const auto& r : reports) {
    const char* tag = !r.asserted ? "INFO" : (r.passed ? "PASS" : "FAIL");
    std::cerr << tag << "  " << r.check_id << "  " << r.statistic << " " << r.relation << " "
              << r.threshold << "\n";
  }
  const nlohmann::json j = reports;
  emit(j.dump(2) + "\n", a.out);
  return dcs::all_asserted_passed(reports) ? 0 : 1;
}

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
};

dcs::ExperimentConfig build_config(const ConfigArgs& a) {
  dcs::ExperimentConfig config =
      a.config_path.empty() ? dcs::ExperimentConfig{} : dcs::load_experiment_config(a.config_path);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw dcs::ConfigError("--set expects key=value, got '" + kv + "'");
    dcs::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (a.seed) {
    config.seeds = {*a.seed};
  } else if (config.seeds.empty()) {
    config.seeds = {default_seed()};
  }
  if (!a.out.empty()) config.output = a.out;
  return config;
}

int run_experiment_cmd(const ConfigArgs& a) {
  const dcs::ExperimentConfig config = build_config(a);
  config.validate();
  const dcs::ExperimentResult result = dcs::run_experiment(config);
  for (const auto& cell : result.cells) {
    if (!cell.diagnostic.empty()) {
      std::cerr << "warning: " << dcs::to_string(cell.loss) << " sigma=" << cell.sigma
                << " seed=" << cell.seed << ": " << cell.diagnostic << "\n";
    }
  }
  emit(dcs::format_results_csv(result.rows, config), config.output);
  return 0;
}

struct TrainArgs {
  ConfigArgs base;
  std::string data_path;
  std::string loss;
  std::optional<double> sigma;
  std::string log_path;
};

int run_train(const TrainArgs& a) {
  // The checkpoint path doubles as the config's output path.
  const std::string& checkpoint = a.base.out;
  dcs::ExperimentConfig config = build_config(a.base);
  if (!a.loss.empty()) config.losses = {dcs::parse_loss_kind(a.loss)};
  if (a.sigma) config.sigmas = {*a.sigma};
  config.validate();
  const dcs::LossKind loss = config.losses.front();
  const std::uint64_t seed = config.seeds.front();

  dcs::AEParams params;
  std::vector<dcs::EpochLog> log;
  nlohmann::json summary{{"loss", dcs::to_string(loss)}, {"seed", seed},
                         {"config_hash", dcs::config_hash(config)}};
  if (!a.data_path.empty()) {
    std::vector<dcs::SignalVec> data;
    for (const auto& row : dcs::read_csv(a.data_path)) data.emplace_back(row);
    if (data.empty()) throw dcs::ConfigError("train: no rows in " + a.data_path);
    if (data.front().dim() != config.dim()) {
      throw dcs::DimensionError("train: data has " + std::to_string(data.front().dim()) +
                                " columns, config height * width is " + std::to_string(config.dim()));
    }
    dcs::RngStream init_rng(seed, dcs::fnv1a64("init"));
    dcs::TrainResult trained =
        dcs::train(dcs::make_model(config, init_rng), data, dcs::make_loss_config(config, loss),
                   dcs::make_train_config(config), dcs::RngStream(seed, dcs::fnv1a64("train")));
    params = std::move(trained.params);
    log = std::move(trained.log);
  } else {
    const double sigma = config.sigmas.front();
    dcs::RngStream rng = dcs::data_stream(seed, sigma);
    const dcs::Dataset data = dcs::generate_synthetic(config, sigma, rng);
    for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
    dcs::CellResult cell = dcs::run_cell(config, loss, sigma, seed, data);
    if (!cell.params) throw dcs::DivergenceError(cell.diagnostic, 0);
    params = std::move(*cell.params);
    log = std::move(cell.log);
    summary["sigma"] = sigma;
    summary["probe_accuracy"] = cell.probe_accuracy;
    summary["denoise_cosine"] = cell.denoise_cosine;
  }
  summary["final_train_loss"] = log.empty() ? nlohmann::json(nullptr) : nlohmann::json(log.back().mean_loss);
  dcs::save_checkpoint(params, checkpoint);
  if (!a.log_path.empty()) {
    std::string text = "# config_hash=" + dcs::config_hash(config) + "\nepoch,mean_loss\n";
    for (const auto& e : log) text += std::to_string(e.epoch) + "," + dcs::format_double(e.mean_loss) + "\n";
    dcs::write_text_file(a.log_path, text);
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct DenoiseArgs {
  std::string checkpoint, in, out;
  bool rescale = false;
};

int run_denoise(const DenoiseArgs& a) {
  const dcs::AEParams params = dcs::load_checkpoint(a.checkpoint);
  emit(dcs::format_csv(dcs::denoise(params, dcs::read_csv(a.in), a.rescale)), a.out);
  return 0;
}

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--config", a.config_path, "Experiment config file (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", a.sets, "Override a config key, e.g. --set epochs=20");
  cmd->add_option("--seed", a.seed, "Seed (replaces the config seed list)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoising cosine-similarity loss: estimators, verification and experiments"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate c^ and k^ from a masked pair");
  estimate->add_option("--x", est.x_path, "Noisy vector, one value per line")->required()->check(CLI::ExistingFile);
  estimate->add_option("--x-tilde", est.x_tilde_path, "Masked counterpart, one value per line")
      ->required()
      ->check(CLI::ExistingFile);
  estimate->add_option("--mask", est.mask_path, "0/1 mask; restricts the estimate to its support")
      ->check(CLI::ExistingFile);
  estimate->add_option("--samples", est.samples, "Monte Carlo samples for k^")->check(CLI::PositiveNumber);
  estimate->add_option("--seed", est.seed, "RNG seed (default: $DCS_SEED or 0)");
  estimate->add_option("--out", est.out, "Output JSON path (default stdout)");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Run the Monte Carlo theory checks");
  verify->add_option("--check", ver.check, "Check id or 'all'");
  verify->add_option("--seed", ver.seed, "Master seed (default: $DCS_SEED or 0)");
  verify->add_option("--out", ver.out, "Report JSON path (default stdout)");
  verify->add_option("--config", ver.config_path, "Recorded check config (JSON) to re-run")
      ->check(CLI::ExistingFile);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one autoencoder and save a checkpoint");
  add_config_options(train, tr.base);
  train->add_option("--data", tr.data_path, "Noisy training data CSV (default: synthetic)")
      ->check(CLI::ExistingFile);
  train->add_option("--loss", tr.loss, "mse | cs | n2v | dcs | dcs-approx");
  train->add_option("--sigma", tr.sigma, "Noise level for synthetic data");
  train->add_option("--out", tr.base.out, "Checkpoint path")->required();
  train->add_option("--log", tr.log_path, "Per-epoch loss CSV");

  ConfigArgs ex;
  auto* experiment = app.add_subcommand("run-experiment", "Run the loss x sigma x seed grid");
  add_config_options(experiment, ex);
  experiment->add_option("--out", ex.out, "Results CSV path (overrides config output; '-' for stdout)");

  DenoiseArgs dn;
  auto* denoise = app.add_subcommand("denoise", "Apply a checkpoint to each row of a CSV");
  denoise->add_option("--checkpoint", dn.checkpoint, "Model checkpoint JSON")->required()->check(CLI::ExistingFile);
  denoise->add_option("--in", dn.in, "Input CSV, one sample per row")->required()->check(CLI::ExistingFile);
  denoise->add_option("--out", dn.out, "Output CSV path (default stdout)");
  denoise->add_flag("--rescale", dn.rescale, "Min-max rescale each output row to [0, 1]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*estimate) return run_estimate(est);
    if (*verify) return run_verify(ver);
    if (*train) return run_train(tr);
    if (*experiment) return run_experiment_cmd(ex);
    if (*denoise) return run_denoise(dn);
  } catch (const dcs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
