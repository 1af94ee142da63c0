#include "dcs/masking.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "dcs/error.hpp"

namespace dcs {

MaskVec::MaskVec(std::vector<std::uint8_t> bits, double rho) : bits_(std::move(bits)), rho_(rho) {
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] > 1) throw ConfigError("MaskVec: bits must be 0 or 1");
    if (bits_[i]) support_.push_back(i);
  }
}

Vector MaskVec::as_vector() const {
  Vector b = Vector::Zero(static_cast<Eigen::Index>(bits_.size()));
  for (auto i : support_) b[static_cast<Eigen::Index>(i)] = 1.0;
  return b;
}

MaskedPair::MaskedPair(SignalVec x_, SignalVec x_tilde_, MaskVec mask_)
    : x(std::move(x_)), x_tilde(std::move(x_tilde_)), mask(std::move(mask_)) {
  if (x.dim() != x_tilde.dim() || x.dim() != mask.dim()) {
    throw DimensionError("MaskedPair: x, x_tilde and mask must share one dimension");
  }
}

Vector gather(const Vector& v, const std::vector<std::size_t>& support) {
  Vector out(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(support[i])];
  }
  return out;
}

MaskVec draw_mask(RngStream& rng, std::size_t dim, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("draw_mask: rho must lie in (0, 1)");
  if (dim == 0) throw DimensionError("draw_mask: dim must be positive");
  std::vector<std::uint8_t> bits(dim);
  for (;;) {
    bool any = false;
    for (auto& bit : bits) {
      bit = rng.uniform() < rho ? 1 : 0;
      any = any || bit;
    }
    if (any) return MaskVec(std::move(bits), rho);
  }
}

MaskedPair blind_spot_mask(RngStream& rng, const SignalVec& x, GridShape shape, double rho,
                           int patch_radius) {
  if (shape.size() != x.dim()) {
    throw DimensionError("blind_spot_mask: grid " + std::to_string(shape.height) + "x" +
                         std::to_string(shape.width) + " does not match dim " +
                         std::to_string(x.dim()));
  }
  if (patch_radius < 1) throw ConfigError("blind_spot_mask: patch_radius must be >= 1");
  if (shape.size() < 2) throw ConfigError("blind_spot_mask: a 1x1 image has no neighbours");

  MaskVec mask = draw_mask(rng, x.dim(), rho);
  const Vector& src = x.values();
  Vector out = src;
  const auto r = static_cast<std::ptrdiff_t>(patch_radius);
  const auto h = static_cast<std::ptrdiff_t>(shape.height);
  const auto w = static_cast<std::ptrdiff_t>(shape.width);
  for (auto d : mask.support()) {
    const auto row = static_cast<std::ptrdiff_t>(d) / w;
    const auto col = static_cast<std::ptrdiff_t>(d) % w;
    const auto r0 = std::max<std::ptrdiff_t>(0, row - r), r1 = std::min(h - 1, row + r);
    const auto c0 = std::max<std::ptrdiff_t>(0, col - r), c1 = std::min(w - 1, col + r);
    const auto cols = c1 - c0 + 1;
    const auto cells = (r1 - r0 + 1) * cols;
    const auto center = (row - r0) * cols + (col - c0);
    // Pick among cells - 1 positions, skipping the centre.
    auto k = static_cast<std::ptrdiff_t>(rng.uniform_index(static_cast<std::uint64_t>(cells - 1)));
    if (k >= center) ++k;
    const auto nr = r0 + k / cols;
    const auto nc = c0 + k % cols;
    out[static_cast<Eigen::Index>(d)] = src[static_cast<Eigen::Index>(nr * w + nc)];
  }
  return MaskedPair(x, SignalVec(std::move(out)), std::move(mask));
}

MaskedPair tau_amn_mask(RngStream& rng, const SignalVec& x, double rho, int delta) {
  if (delta < 1) throw ConfigError("tau_amn_mask: delta must be >= 1");
  if (x.dim() < 2) throw ConfigError("tau_amn_mask: sequence length must be >= 2");

  MaskVec mask = draw_mask(rng, x.dim(), rho);
  const Vector& src = x.values();
  Vector out = src;
  const auto len = static_cast<std::ptrdiff_t>(x.dim());
  for (auto d : mask.support()) {
    const auto t = static_cast<std::ptrdiff_t>(d);
    const auto lo = std::max<std::ptrdiff_t>(0, t - delta);
    const auto hi = std::min<std::ptrdiff_t>(len - 1, t + delta);
    auto k = lo + static_cast<std::ptrdiff_t>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo)));
    if (k >= t) ++k;
    out[static_cast<Eigen::Index>(t)] = src[static_cast<Eigen::Index>(k)];
  }
  return MaskedPair(x, SignalVec(std::move(out)), std::move(mask));
}

}  // namespace dcs
