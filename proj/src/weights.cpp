#include "dcs/weights.hpp"

#include <algorithm>
#include <cmath>

#include "dcs/error.hpp"

namespace dcs {

namespace {

// Welford accumulator; the reduction order is the sample order.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double std_error() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

}  // namespace

double estimate_c(const Vector& x, const Vector& x_tilde) {
  if (x.size() != x_tilde.size()) throw DimensionError("estimate_c: dimension mismatch");
  const double diff = (x - x_tilde).norm();
  if (!(diff > 0.0)) throw DegenerateInputError("estimate_c: x and x_tilde are identical");
  const double inner = std::max(x.dot(x_tilde), 0.0);
  return std::sqrt(2.0 * inner) / diff;
}

double estimate_c(const MaskedPair& pair) {
  const auto& support = pair.mask.support();
  return estimate_c(gather(pair.x.values(), support), gather(pair.x_tilde.values(), support));
}

WeightEstimate estimate_k_mc(RngStream& rng, double c_hat, std::size_t dim,
                             std::size_t n_samples) {
  if (dim < 2) throw DimensionError("estimate_k_mc: D must be >= 2");
  if (n_samples == 0) throw ConfigError("estimate_k_mc: n_samples must be >= 1");
  if (!(c_hat >= 0.0)) throw ConfigError("estimate_k_mc: c_hat must be nonnegative");

  const double d = static_cast<double>(dim);
  const double inv_sqrt_d = 1.0 / std::sqrt(d);
  const double dof = d - 1.0;
  RunningStats stats;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double kappa = rng.normal();
    const double nu = rng.chi_square(dof);
    const double a = c_hat + kappa * inv_sqrt_d;
    const double denom = std::sqrt(a * a + nu / d);
    // denom == 0 has probability zero; the limit of a/|a| at a=0 is taken as 0.
    stats.push(denom > 0.0 ? a / denom : 0.0);
  }
  return {c_hat, stats.mean, n_samples, stats.std_error()};
}

double k_closed_form(double c) {
  if (!(c >= 0.0)) throw ConfigError("k_closed_form: c must be nonnegative");
  if (std::isinf(c)) return 1.0;
  return c / std::sqrt(c * c + 1.0);
}

MonteCarloValue k_oracle_isotropic(RngStream& rng, double signal_norm, std::size_t dim,
                                   const NoiseSpec& noise, std::size_t n_samples) {
  noise.validate();
  if (dim < 2) throw DimensionError("k_oracle_isotropic: D must be >= 2");
  if (n_samples == 0) throw ConfigError("k_oracle_isotropic: n_samples must be >= 1");
  if (!(signal_norm >= 0.0)) throw ConfigError("k_oracle_isotropic: signal norm must be >= 0");

  Vector eps(static_cast<Eigen::Index>(dim));
  RunningStats stats;
  for (std::size_t i = 0; i < n_samples; ++i) {
    fill_isotropic_noise(rng, noise, eps);
    const double first = eps[0] + signal_norm;
    const double rest = eps.tail(eps.size() - 1).squaredNorm();
    const double norm = std::sqrt(first * first + rest);
    stats.push(norm > 0.0 ? first / norm : 0.0);
  }
  return {stats.mean, stats.std_error(), n_samples};
}

MonteCarloValue k_oracle_isotropic(RngStream& rng, const SignalVec& s, const NoiseSpec& noise,
                                   std::size_t n_samples) {
  return k_oracle_isotropic(rng, norm2(s), s.dim(), noise, n_samples);
}

double theorem2_delta_c(double c) { return std::min(1.0, 8.0 * std::exp(-c * c / 4.0)); }

double theorem2_min_dim(double c, double sigma_bar_sq, double sigma_sq, double delta) {
  const double root = 12.0 / std::min(c * c, 1.0) * (sigma_bar_sq / sigma_sq) * std::log(12.0 / delta);
  return root * root;
}

double theorem2_bound(double c, double sigma_bar_sq, double sigma_sq, double delta,
                      std::size_t dim) {
  if (!(c > 0.0)) throw ConfigError("theorem2_bound: c must be positive (bound has a 1/c term)");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("theorem2_bound: delta must lie in (0, 1)");
  if (!(sigma_sq > 0.0) || sigma_bar_sq < sigma_sq) {
    throw ConfigError("theorem2_bound: need 0 < sigma^2 <= sigma_bar^2");
  }
  if (dim == 0) throw DimensionError("theorem2_bound: D must be positive");
  return 12.0 * (sigma_bar_sq / sigma_sq) * (c + 1.0 / c) * std::log(12.0 / delta) /
         std::sqrt(static_cast<double>(dim));
}

bool theorem2_applicable(double c, double sigma_bar_sq, double sigma_sq, double delta,
                         std::size_t dim) {
  if (!(c > 0.0) || !(delta > 0.0)) return false;
  return delta < theorem2_delta_c(c) &&
         static_cast<double>(dim) >= theorem2_min_dim(c, sigma_bar_sq, sigma_sq, delta);
}

}  // namespace dcs
