#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dcs/numerics.hpp"

namespace dcs {

// Bernoulli selection vector b together with the rho it was drawn with.
class MaskVec {
 public:
  MaskVec(std::vector<std::uint8_t> bits, double rho);

  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  double rho() const noexcept { return rho_; }
  std::size_t dim() const noexcept { return bits_.size(); }
  // ||b||_1
  std::size_t count() const noexcept { return support_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  // Indices with b_d = 1, ascending.
  const std::vector<std::size_t>& support() const noexcept { return support_; }
  // b as a 0/1 real vector.
  Vector as_vector() const;

 private:
  std::vector<std::uint8_t> bits_;
  double rho_;
  std::vector<std::size_t> support_;
};

// (x, x~, b). Coordinates outside the mask support are identical in x and x~.
struct MaskedPair {
  SignalVec x;
  SignalVec x_tilde;
  MaskVec mask;

  MaskedPair(SignalVec x, SignalVec x_tilde, MaskVec mask);
};

// Image (height x width, row-major) or sequence (height == 1, width == T).
struct GridShape {
  std::size_t height = 1;
  std::size_t width = 1;

  static GridShape image(std::size_t height, std::size_t width) { return {height, width}; }
  static GridShape sequence(std::size_t length) { return {1, length}; }
  std::size_t size() const noexcept { return height * width; }
};

enum class MaskKind { blind_spot, tau_amn };

// Restrict v to the coordinates in `support`, in order.
Vector gather(const Vector& v, const std::vector<std::size_t>& support);

// iid Bernoulli(rho) bits; an all-zero draw is redrawn so ||b||_1 >= 1.
// Throws ConfigError unless 0 < rho < 1.
MaskVec draw_mask(RngStream& rng, std::size_t dim, double rho);

// Blind-spot masking: each selected pixel is replaced by a uniformly chosen
// pixel of the (2r+1)x(2r+1) patch around it, clipped at the image border
// and never the pixel itself.
MaskedPair blind_spot_mask(RngStream& rng, const SignalVec& x, GridShape shape, double rho,
                           int patch_radius = 1);

// tau-AMN: each selected step t is replaced by x_{t'}, t' uniform on
// [t - delta, t + delta] \ {t} intersected with the sequence.
MaskedPair tau_amn_mask(RngStream& rng, const SignalVec& x, double rho, int delta);

}  // namespace dcs
