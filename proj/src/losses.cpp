#include "dcs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "dcs/error.hpp"

namespace dcs {

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "cs") return LossKind::cs;
  if (name == "n2v") return LossKind::n2v;
  if (name == "dcs") return LossKind::dcs;
  if (name == "dcs-approx") return LossKind::dcs_approx;
  throw ConfigError("unknown loss kind '" + std::string(name) + "'");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::cs: return "cs";
    case LossKind::n2v: return "n2v";
    case LossKind::dcs: return "dcs";
    case LossKind::dcs_approx: return "dcs-approx";
  }
  return "unknown";
}

bool is_masked(LossKind kind) {
  return kind == LossKind::n2v || kind == LossKind::dcs || kind == LossKind::dcs_approx;
}

LossValue cs_loss(const Vector& u, const Vector& v, double eta) {
  if (u.size() != v.size()) throw DimensionError("cs_loss: dimension mismatch");
  const double nu = u.norm();
  const double nv = v.norm();
  const double uv = u.dot(v);
  const double product = nu * nv;
  LossValue out;
  if (product > eta) {
    out.value = -uv / product;
    out.grad = -u / product + (uv / (nu * nv * nv * nv)) * v;
  } else {
    out.value = -uv / eta;
    out.grad = -u / eta;
  }
  return out;
}

LossValue mse_loss(const Vector& x, const Vector& s_hat) {
  if (x.size() != s_hat.size()) throw DimensionError("mse_loss: dimension mismatch");
  const Vector diff = s_hat - x;
  return {diff.squaredNorm(), 2.0 * diff};
}

LossValue n2v_loss(const MaskedPair& pair, const Vector& s_hat) {
  if (pair.x.dim() != static_cast<std::size_t>(s_hat.size())) {
    throw DimensionError("n2v_loss: reconstruction dimension mismatch");
  }
  LossValue out{0.0, Vector::Zero(s_hat.size())};
  const Vector& x = pair.x.values();
  for (auto d : pair.mask.support()) {
    const auto i = static_cast<Eigen::Index>(d);
    const double r = s_hat[i] - x[i];
    out.value += r * r;
    out.grad[i] = 2.0 * r;
  }
  return out;
}

namespace {

// cs_loss(b.x, b.s^) computed on the gathered subvectors, gradient scattered
// back to full dimension and scaled by `weight`.
LossValue masked_cs(const MaskedPair& pair, const Vector& s_hat, double weight, double eta) {
  if (pair.x.dim() != static_cast<std::size_t>(s_hat.size())) {
    throw DimensionError("dcs_loss: reconstruction dimension mismatch");
  }
  const auto& support = pair.mask.support();
  const LossValue sub = cs_loss(gather(pair.x.values(), support), gather(s_hat, support), eta);
  LossValue out{sub.value * weight, Vector::Zero(s_hat.size())};
  for (std::size_t j = 0; j < support.size(); ++j) {
    out.grad[static_cast<Eigen::Index>(support[j])] = sub.grad[static_cast<Eigen::Index>(j)] * weight;
  }
  return out;
}

}  // namespace

LossValue dcs_loss(const MaskedPair& pair, const Vector& s_hat, double k_hat, double eta) {
  if (!(k_hat > 0.0)) throw ConfigError("dcs_loss: k_hat must be positive (apply the floor first)");
  // Divide rather than multiply by 1/k so k=0.5 is exactly twice k=1.
  LossValue out = masked_cs(pair, s_hat, 1.0, eta);
  out.value /= k_hat;
  out.grad /= k_hat;
  return out;
}

double dcs_approx_weight(double c_hat, double eta) {
  if (std::isinf(c_hat)) return 1.0;
  return std::sqrt(c_hat * c_hat + 1.0) / (c_hat + eta);
}

LossValue dcs_loss_approx(const MaskedPair& pair, const Vector& s_hat, double eta) {
  return masked_cs(pair, s_hat, dcs_approx_weight(estimate_c(pair), eta), eta);
}

MaskedPair make_masked_pair(RngStream& rng, const SignalVec& x, const LossConfig& config) {
  if (config.mask_kind == MaskKind::blind_spot) {
    return blind_spot_mask(rng, x, config.grid, config.rho, config.patch_radius);
  }
  return tau_amn_mask(rng, x, config.rho, config.delta);
}

PreparedSample prepare_sample(RngStream& rng, const SignalVec& x, const LossConfig& config) {
  PreparedSample out;
  if (!is_masked(config.kind)) {
    out.network_input = x.values();
    return out;
  }
  MaskedPair pair = make_masked_pair(rng, x, config);
  if (config.kind != LossKind::n2v) {
    // k^ needs ||b||_1 >= 2 (chi-square with ||b||_1 - 1 dof); redraw the mask.
    while (pair.mask.count() < 2) pair = make_masked_pair(rng, x, config);
    try {
      out.c_hat = estimate_c(pair);
    } catch (const DegenerateInputError&) {
      // x == x~ on the support: no visible noise, the SN ratio is unbounded and k = 1.
      out.c_hat = std::numeric_limits<double>::infinity();
    }
    if (config.kind == LossKind::dcs) {
      if (std::isinf(out.c_hat)) {
        out.k_hat = 1.0;
      } else {
        const WeightEstimate w = estimate_k_mc(rng, out.c_hat, pair.mask.count(), config.weight_samples);
        out.k_hat = std::max(w.k_hat, config.k_floor);
      }
    }
  }
  out.network_input = pair.x_tilde.values();
  out.pair.emplace(std::move(pair));
  return out;
}

LossValue evaluate_loss(const PreparedSample& prepared, const SignalVec& x, const Vector& s_hat,
                        const LossConfig& config) {
  switch (config.kind) {
    case LossKind::mse:
      return mse_loss(x.values(), s_hat);
    case LossKind::cs:
      return cs_loss(x.values(), s_hat, config.eta);
    case LossKind::n2v:
      return n2v_loss(*prepared.pair, s_hat);
    case LossKind::dcs:
      return dcs_loss(*prepared.pair, s_hat, prepared.k_hat, config.eta);
    case LossKind::dcs_approx:
      return masked_cs(*prepared.pair, s_hat, dcs_approx_weight(prepared.c_hat, config.eta),
                       config.eta);
  }
  throw ConfigError("evaluate_loss: unknown loss kind");
}

BatchRisk batch_risk(std::span<const SignalVec> batch, const Reconstructor& reconstruct,
                     const LossConfig& config, std::span<RngStream> streams) {
  if (batch.empty()) throw ConfigError("batch_risk: batch must be nonempty");
  if (streams.size() != batch.size()) throw DimensionError("batch_risk: one stream per sample");
  BatchRisk out;
  out.batch_size = batch.size();
  out.per_sample.reserve(batch.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const PreparedSample prepared = prepare_sample(streams[i], batch[i], config);
    const Vector s_hat = reconstruct(prepared.network_input);
    out.per_sample.push_back(evaluate_loss(prepared, batch[i], s_hat, config));
    sum += out.per_sample.back().value;
  }
  out.mean_value = sum / static_cast<double>(batch.size());
  return out;
}

BatchRisk batch_risk(std::span<const SignalVec> batch, const Reconstructor& reconstruct,
                     const LossConfig& config, const RngStream& rng) {
  std::vector<RngStream> streams;
  streams.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) streams.push_back(rng.split(i));
  return batch_risk(batch, reconstruct, config, std::span<RngStream>(streams));
}

}  // namespace dcs
