#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcs/masking.hpp"
#include "dcs/numerics.hpp"
#include "dcs/weights.hpp"

namespace dcs {

enum class LossKind { mse, cs, n2v, dcs, dcs_approx };

// Config strings: "mse", "cs", "n2v", "dcs", "dcs-approx".
LossKind parse_loss_kind(std::string_view name);
std::string to_string(LossKind kind);
// Losses that train on a masked input x~ and score only masked coordinates.
bool is_masked(LossKind kind);

inline constexpr double kDefaultEta = 1e-8;
inline constexpr double kDefaultKFloor = 0.05;

// Loss value plus its gradient with respect to the reconstruction s^.
struct LossValue {
  double value = 0.0;
  Vector grad;
};

struct BatchRisk {
  double mean_value = 0.0;
  std::vector<LossValue> per_sample;
  std::size_t batch_size = 0;
};

// -<u,v> / max(||u|| ||v||, eta); gradient with respect to v.
LossValue cs_loss(const Vector& u, const Vector& v, double eta = kDefaultEta);
// ||x - s^||^2
LossValue mse_loss(const Vector& x, const Vector& s_hat);
// ||b.s^ - b.x||^2; s^ is expected to be h(x~).
LossValue n2v_loss(const MaskedPair& pair, const Vector& s_hat);
// cs_loss(b.x, b.s^) / k_hat, evaluated on the masked subvectors.
LossValue dcs_loss(const MaskedPair& pair, const Vector& s_hat, double k_hat,
                   double eta = kDefaultEta);
// sqrt(c^2 + 1) / (c + eta) * cs_loss(b.x, b.s^) with c^ from the masked subvectors.
LossValue dcs_loss_approx(const MaskedPair& pair, const Vector& s_hat, double eta = kDefaultEta);
double dcs_approx_weight(double c_hat, double eta = kDefaultEta);

struct LossConfig {
  LossKind kind = LossKind::dcs;
  MaskKind mask_kind = MaskKind::blind_spot;
  // Grid for blind-spot masking; ignored by tau-AMN.
  GridShape grid;
  double rho = 0.1;
  int patch_radius = 1;
  int delta = 2;
  std::size_t weight_samples = kDefaultWeightSamples;
  // k^ is clamped to at least this value before dividing.
  double k_floor = kDefaultKFloor;
  double eta = kDefaultEta;
};

// Per-sample quantities fixed before the network runs: the network input,
// the mask pair (masked losses) and the floored k^ (dCS).
struct PreparedSample {
  Vector network_input;
  std::optional<MaskedPair> pair;
  double c_hat = 0.0;
  double k_hat = 1.0;
};

MaskedPair make_masked_pair(RngStream& rng, const SignalVec& x, const LossConfig& config);
PreparedSample prepare_sample(RngStream& rng, const SignalVec& x, const LossConfig& config);
LossValue evaluate_loss(const PreparedSample& prepared, const SignalVec& x, const Vector& s_hat,
                        const LossConfig& config);

using Reconstructor = std::function<Vector(const Vector&)>;

// Mini-batch risk. Sample i draws from streams[i]; the mean is summed left
// to right over sample index.
BatchRisk batch_risk(std::span<const SignalVec> batch, const Reconstructor& reconstruct,
                     const LossConfig& config, std::span<RngStream> streams);
// Same, with streams[i] = rng.split(i).
BatchRisk batch_risk(std::span<const SignalVec> batch, const Reconstructor& reconstruct,
                     const LossConfig& config, const RngStream& rng);

}  // namespace dcs
