#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dcs/numerics.hpp"

namespace dcs {

/*
 * One pass/fail line of the theory harness. `passed` is exactly
 * `statistic <relation> threshold`. Informational lines (skipped cells,
 * diagnostics) carry asserted == false and never affect the exit status.
 * `config` is the full configuration of the check that produced the line;
 * feeding it back to run_check reproduces the statistic bit for bit.
 */
struct VerificationReport {
  std::string check_id;
  nlohmann::json config;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string relation = "<=";
  bool passed = false;
  bool asserted = true;
  std::string details;
};

void to_json(nlohmann::json& j, const VerificationReport& r);

struct LemmaCheckConfig {
  std::uint64_t seed = 0;
  std::size_t dim = 8;
  double signal_norm = 2.0;
  double sigma = 1.0;
  std::size_t n_draws = 200000;
  std::size_t oracle_samples = 200000;
  // Scale mixture used by the second run; must satisfy E[S^2] == sigma^2.
  std::vector<double> mixture_scales{0.5, 1.3228756555322954};
  std::vector<double> mixture_weights{0.5, 0.5};
};

struct Theorem1CheckConfig {
  std::uint64_t seed = 0;
  std::vector<int> mask{1, 1, 0, 1, 1, 0};
  // ||b.s|| = c * sigma * sqrt(||b||_1)
  double c = 1.0;
  double sigma = 1.0;
  std::size_t n_draws = 1000000;
  std::size_t oracle_samples = 1000000;
  std::size_t mlp_hidden = 16;
  // Informational blind-spot run.
  std::size_t bsm_height = 4;
  std::size_t bsm_width = 4;
  double bsm_rho = 0.5;
  std::size_t bsm_draws = 20000;
  std::size_t bsm_weight_samples = 4096;
};

struct Theorem2CheckConfig {
  std::uint64_t seed = 0;
  std::vector<double> c_grid{0.5, 1.0, 2.0};
  std::vector<std::size_t> dims{64, 256, 1024, 4096, 16384};
  std::size_t trials = 200;
  double sigma = 1.0;
  double delta = 0.1;
  double max_slope = -0.4;
};

struct Theorem3CheckConfig {
  std::uint64_t seed = 0;
  std::vector<double> c_grid{0.5, 1.0, 2.0};
  std::vector<std::size_t> dims{16, 64, 256, 1024, 4096};
  std::size_t oracle_samples = 100000;
  double sigma = 1.0;
  double max_slope = -0.4;
  // Allowed |k_oracle - c/sqrt(c^2+1)| at the largest dimension.
  double gap_tolerance = 0.01;
};

struct PropB1CheckConfig {
  std::uint64_t seed = 0;
  std::size_t dim = 32;
  double rho = 0.1;
  std::size_t n_inputs = 100;
  // Dimension for the exhaustive sum over all 2^D masks.
  std::size_t enumeration_dim = 10;
  double identity_tolerance = 1e-12;
  double sigma = 0.5;
  double offset_rho = 0.3;
  std::size_t n_pairs = 5;
  std::size_t n_draws = 100000;
};

struct Prop1CheckConfig {
  std::uint64_t seed = 0;
  std::size_t dim = 16;
  double rho = 0.5;
  double sigma = 0.5;
  std::size_t n_maps = 50;
  std::size_t n_draws = 2000;
  std::size_t mlp_hidden = 32;
  double min_correlation = 0.8;
};

// Estimates E[x/||x||] for x = s + eps and checks it is k * s/||s||:
// orthogonal residual within 4 MC sigma, parallel part within 3 combined
// sigma of the brute-force k oracle; also the s = 0 and mixture-noise cases.
std::vector<VerificationReport> check_lemma_collinearity(const LemmaCheckConfig& config = {});

// Both sides of the masked identity
//   E[l_CS(b.s, b.h(s+e~))] == E[l_CS(b.x, b.h(s+e~))] / k
// with independent e, e~ and a fixed b, for several fixed maps h.
std::vector<VerificationReport> check_theorem1_identity(const Theorem1CheckConfig& config = {});

// Median |c - c^| decays like D^(-1/2); the (1 - delta) quantile stays under
// the high-probability bound wherever its preconditions hold.
std::vector<VerificationReport> check_theorem2_decay(const Theorem2CheckConfig& config = {});

// |k_oracle(D) - c/sqrt(c^2+1)| shrinks with D at log-log slope <= max_slope.
std::vector<VerificationReport> check_theorem3_limit(const Theorem3CheckConfig& config = {});

// Masked-MSE expectation identities behind the Noise2Void equivalence.
std::vector<VerificationReport> check_prop_b1_n2v(const PropB1CheckConfig& config = {});

// Rank correlation between masked and supervised clean cosine losses over
// random maps.
std::vector<VerificationReport> check_prop1_correlation(const Prop1CheckConfig& config = {});

// "lemma_collinearity", "theorem1_identity", "theorem2_decay",
// "theorem3_limit", "prop_b1_n2v", "prop1_correlation".
const std::vector<std::string>& check_ids();

// Runs one check (or "all") with default settings and the given master seed.
std::vector<VerificationReport> run_checks(std::string_view id, std::uint64_t seed);

// Runs one check from a recorded config (the `config` field of a report).
// `id` may carry a "/sub" suffix, which is ignored.
std::vector<VerificationReport> run_check(std::string_view id, const nlohmann::json& config);

bool all_asserted_passed(const std::vector<VerificationReport>& reports);

// Spearman rank correlation with average ranks for ties.
double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dcs
