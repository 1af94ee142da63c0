#pragma once

#include <cstddef>

#include "dcs/masking.hpp"
#include "dcs/numerics.hpp"

namespace dcs {

// Result of the Monte Carlo weight estimate k^ for a given c^.
struct WeightEstimate {
  double c_hat = 0.0;
  double k_hat = 0.0;
  std::size_t n_samples = 0;
  // Sample standard deviation of the summands divided by sqrt(n_samples).
  double std_error = 0.0;
};

struct MonteCarloValue {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

// Default Monte Carlo budgets: training-time k^ and verification oracles.
inline constexpr std::size_t kDefaultWeightSamples = 128;
inline constexpr std::size_t kDefaultOracleSamples = 100000;

// c^ = sqrt(2 [x.x~]_+) / ||x - x~||. Throws DegenerateInputError when x == x~.
double estimate_c(const Vector& x, const Vector& x_tilde);
// c^ over the masked coordinates only (dimension ||b||_1).
double estimate_c(const MaskedPair& pair);

// k^ = mean_i (c^ + k_i/sqrt(D)) / sqrt((c^ + k_i/sqrt(D))^2 + n_i/D),
// k_i ~ N(0,1), n_i ~ chi^2_{D-1}. The draw sequence does not depend on
// c_hat, so copies of one stream give common random numbers across c_hat.
// Throws DimensionError for D < 2, ConfigError for n_samples == 0 or c_hat < 0.
WeightEstimate estimate_k_mc(RngStream& rng, double c_hat, std::size_t dim,
                             std::size_t n_samples = kDefaultWeightSamples);

// Large-D limit c / sqrt(c^2 + 1).
double k_closed_form(double c);

// Brute-force E[(e_1 + t) / ||e + t e_1||] with t = ||s|| and e drawn from
// `noise` in dim(s) dimensions. Independent of the kappa/chi-square route.
MonteCarloValue k_oracle_isotropic(RngStream& rng, const SignalVec& s, const NoiseSpec& noise,
                                   std::size_t n_samples = kDefaultOracleSamples);
MonteCarloValue k_oracle_isotropic(RngStream& rng, double signal_norm, std::size_t dim,
                                   const NoiseSpec& noise,
                                   std::size_t n_samples = kDefaultOracleSamples);

// High-probability bound on |c - c^|:
//   12 (sigma_bar^2 / sigma^2) (c + 1/c) log(12/delta) / sqrt(D).
// Throws ConfigError for c <= 0, delta outside (0, 1), or inconsistent variances.
double theorem2_bound(double c, double sigma_bar_sq, double sigma_sq, double delta,
                      std::size_t dim);
// delta_c = min(1, 8 exp(-c^2/4)).
double theorem2_delta_c(double c);
// D_min = (12 / min(c^2, 1) * sigma_bar^2/sigma^2 * log(12/delta))^2.
double theorem2_min_dim(double c, double sigma_bar_sq, double sigma_sq, double delta);
// True when delta < delta_c and dim >= D_min, i.e. the bound is guaranteed.
bool theorem2_applicable(double c, double sigma_bar_sq, double sigma_sq, double delta,
                         std::size_t dim);

}  // namespace dcs
