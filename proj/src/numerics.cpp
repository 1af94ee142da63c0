#include "dcs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "dcs/error.hpp"

namespace dcs {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::array<std::uint32_t, 4> RngStream::philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

RngStream RngStream::split(std::uint64_t tag) const {
  return RngStream(seed_, mix64(stream_id_ ^ mix64(tag)));
}

void RngStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = philox(ctr, key);
  buffer_pos_ = 0;
  ++block_;
}

std::uint64_t RngStream::next_u64() {
  if (buffer_pos_ > 2) refill();
  const std::uint64_t lo = buffer_[buffer_pos_];
  const std::uint64_t hi = buffer_[buffer_pos_ + 1];
  buffer_pos_ += 2;
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw ConfigError("uniform_index: n must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

double RngStream::normal() {
  if (cached_normal_) {
    const double z = *cached_normal_;
    cached_normal_.reset();
    return z;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

double RngStream::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw ConfigError("gamma: shape and scale must be positive");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0, 1.0);
    return scale * g * std::pow(uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return scale * d * v;
    if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

double RngStream::chi_square(double dof) {
  if (!(dof > 0.0)) throw ConfigError("chi_square: degrees of freedom must be positive");
  return gamma(0.5 * dof, 2.0);
}

SignalVec::SignalVec(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw DimensionError("SignalVec: dimension must be positive");
  if (!values_.allFinite()) throw ConfigError("SignalVec: entries must be finite");
}

SignalVec::SignalVec(const std::vector<double>& values)
    : SignalVec(Vector(Eigen::Map<const Vector>(values.data(),
                                                static_cast<Eigen::Index>(values.size())))) {}

std::vector<double> SignalVec::to_std() const {
  return std::vector<double>(values_.data(), values_.data() + values_.size());
}

bool SignalVec::operator==(const SignalVec& other) const {
  return values_.size() == other.values_.size() && values_ == other.values_;
}

namespace {
void require_same_dim(const SignalVec& u, const SignalVec& v, const char* op) {
  if (u.dim() != v.dim()) {
    throw DimensionError(std::string(op) + ": dimension mismatch (" + std::to_string(u.dim()) +
                         " vs " + std::to_string(v.dim()) + ")");
  }
}
}  // namespace

double dot(const SignalVec& u, const SignalVec& v) {
  require_same_dim(u, v, "dot");
  return u.values().dot(v.values());
}

double norm2(const SignalVec& u) { return u.values().norm(); }

SignalVec hadamard(const SignalVec& u, const SignalVec& v) {
  require_same_dim(u, v, "hadamard");
  return SignalVec(Vector(u.values().cwiseProduct(v.values())));
}

NoiseSpec NoiseSpec::gaussian(double sigma) {
  NoiseSpec spec;
  spec.sigma = sigma;
  spec.validate();
  return spec;
}

NoiseSpec NoiseSpec::scale_mixture(double sigma, std::vector<ScaleComponent> components) {
  NoiseSpec spec;
  spec.sigma = sigma;
  spec.mixture = std::move(components);
  spec.validate();
  return spec;
}

void NoiseSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("noise: sigma must be positive");
  if (mixture.empty()) return;
  double total_weight = 0.0;
  double second_moment = 0.0;
  for (const auto& c : mixture) {
    if (!(c.scale > 0.0) || !std::isfinite(c.scale)) {
      throw ConfigError("noise mixture: scales must be positive and finite");
    }
    if (!(c.weight > 0.0)) throw ConfigError("noise mixture: weights must be positive");
    total_weight += c.weight;
    second_moment += c.weight * c.scale * c.scale;
  }
  if (std::abs(total_weight - 1.0) > 1e-9) throw ConfigError("noise mixture: weights must sum to 1");
  if (std::abs(second_moment - sigma * sigma) > 1e-9) {
    throw ConfigError("noise mixture: E[S^2] = " + std::to_string(second_moment) +
                      " does not match sigma^2 = " + std::to_string(sigma * sigma));
  }
}

double NoiseSpec::sub_gaussian_variance() const {
  if (mixture.empty()) return sigma * sigma;
  double max_sq = 0.0;
  for (const auto& c : mixture) max_sq = std::max(max_sq, c.scale * c.scale);
  return max_sq;
}

double NoiseSpec::draw_scale(RngStream& rng) const {
  if (mixture.empty()) return sigma;
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (const auto& c : mixture) {
    cumulative += c.weight;
    if (u < cumulative) return c.scale;
  }
  return mixture.back().scale;
}

std::vector<double> sample_standard_normal(RngStream& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& z : out) z = rng.normal();
  return out;
}

std::vector<double> sample_chi_square(RngStream& rng, unsigned dof, std::size_t n) {
  if (dof == 0) throw ConfigError("sample_chi_square: dof must be >= 1");
  std::vector<double> out(n);
  for (auto& v : out) v = rng.chi_square(dof);
  return out;
}

void fill_isotropic_noise(RngStream& rng, const NoiseSpec& noise, Eigen::Ref<Vector> out) {
  const double scale = noise.draw_scale(rng);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = scale * rng.normal();
}

SignalVec sample_isotropic_noise(RngStream& rng, std::size_t dim, const NoiseSpec& noise) {
  noise.validate();
  if (dim == 0) throw DimensionError("sample_isotropic_noise: dim must be positive");
  Vector eps(static_cast<Eigen::Index>(dim));
  fill_isotropic_noise(rng, noise, eps);
  return SignalVec(std::move(eps));
}

}  // namespace dcs
