#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dcs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/*
 * Counter-based random stream (Philox4x32-10).
 *
 * The 64-bit seed is the Philox key; the upper half of the 128-bit counter
 * holds the stream id and the lower half a block index. Two streams with the
 * same (seed, stream_id) replay the same sequence; streams with different
 * ids never share a counter block, so parallel workers need no coordination.
 */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Independent child stream; same seed, stream id mixed with `tag`.
  RngStream split(std::uint64_t tag) const;

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller; the second variate of a pair is cached.
  double normal();
  // Gamma(shape, scale) via Marsaglia-Tsang, with the U^(1/a) boost for a < 1.
  double gamma(double shape, double scale);
  double chi_square(double dof);

  // Raw Philox4x32-10 block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;
  std::optional<double> cached_normal_;
};

// splitmix64 finalizer; used to derive stream ids from tags.
std::uint64_t mix64(std::uint64_t x) noexcept;

// 64-bit FNV-1a; turns string tags into stream ids that are stable across platforms.
std::uint64_t fnv1a64(std::string_view text) noexcept;

// Dense real vector with a positive dimension and only finite entries.
class SignalVec {
 public:
  SignalVec() = default;
  explicit SignalVec(Vector values);
  explicit SignalVec(const std::vector<double>& values);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.size()); }
  const Vector& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  std::vector<double> to_std() const;

  bool operator==(const SignalVec& other) const;

 private:
  Vector values_;
};

double dot(const SignalVec& u, const SignalVec& v);
double norm2(const SignalVec& u);
SignalVec hadamard(const SignalVec& u, const SignalVec& v);

// One atom of a discrete scale mixture: eps | S=scale ~ N(0, scale^2 I).
struct ScaleComponent {
  double scale;
  double weight;
};

/*
 * Isotropic noise law. Without a mixture the noise is N(0, sigma^2 I);
 * with one it is the Gaussian scale mixture sum_j w_j N(0, s_j^2 I), which
 * must satisfy sum_j w_j s_j^2 == sigma^2.
 */
struct NoiseSpec {
  double sigma = 1.0;
  std::vector<ScaleComponent> mixture;

  static NoiseSpec gaussian(double sigma);
  // Throws ConfigError when sigma <= 0, weights are not a distribution, or
  // E[S^2] differs from sigma^2 by more than 1e-9.
  static NoiseSpec scale_mixture(double sigma, std::vector<ScaleComponent> components);

  void validate() const;
  bool is_gaussian() const noexcept { return mixture.empty(); }
  // Sub-Gaussian variance proxy: sigma^2 for Gaussian noise, max s_j^2 for a mixture.
  double sub_gaussian_variance() const;
  // Draw the scale S for one noise vector.
  double draw_scale(RngStream& rng) const;
};

std::vector<double> sample_standard_normal(RngStream& rng, std::size_t n);
// Throws ConfigError when dof == 0.
std::vector<double> sample_chi_square(RngStream& rng, unsigned dof, std::size_t n);
SignalVec sample_isotropic_noise(RngStream& rng, std::size_t dim, const NoiseSpec& noise);
// Same draw without SignalVec validation; used in hot Monte Carlo loops.
void fill_isotropic_noise(RngStream& rng, const NoiseSpec& noise, Eigen::Ref<Vector> out);

}  // namespace dcs
