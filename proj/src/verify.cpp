#include "dcs/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "dcs/error.hpp"
#include "dcs/losses.hpp"
#include "dcs/masking.hpp"
#include "dcs/model.hpp"
#include "dcs/weights.hpp"

namespace dcs {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LemmaCheckConfig, seed, dim, signal_norm, sigma,
                                                n_draws, oracle_samples, mixture_scales,
                                                mixture_weights)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Theorem1CheckConfig, seed, mask, c, sigma, n_draws,
                                                oracle_samples, mlp_hidden, bsm_height, bsm_width,
                                                bsm_rho, bsm_draws, bsm_weight_samples)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Theorem2CheckConfig, seed, c_grid, dims, trials,
                                                sigma, delta, max_slope)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Theorem3CheckConfig, seed, c_grid, dims,
                                                oracle_samples, sigma, max_slope, gap_tolerance)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PropB1CheckConfig, seed, dim, rho, n_inputs,
                                                enumeration_dim, identity_tolerance, sigma,
                                                offset_rho, n_pairs, n_draws)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Prop1CheckConfig, seed, dim, rho, sigma, n_maps,
                                                n_draws, mlp_hidden, min_correlation)

void to_json(nlohmann::json& j, const VerificationReport& r) {
  j = nlohmann::json{{"check_id", r.check_id},   {"config", r.config},
                     {"statistic", r.statistic}, {"threshold", r.threshold},
                     {"relation", r.relation},   {"passed", r.passed},
                     {"asserted", r.asserted},   {"details", r.details}};
}

namespace {

struct Running {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double variance() const { return n < 2 ? 0.0 : m2 / static_cast<double>(n - 1); }
  double std_error() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

// Per-coordinate Welford accumulator.
struct RunningVec {
  std::size_t n = 0;
  Vector mean;
  Vector m2;

  explicit RunningVec(Eigen::Index dim) : mean(Vector::Zero(dim)), m2(Vector::Zero(dim)) {}
  void push(const Vector& v) {
    ++n;
    const Vector delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(v - mean);
  }
  Vector variance() const { return m2 / static_cast<double>(n - 1); }
};

VerificationReport make_report(std::string id, const nlohmann::json& config, double statistic,
                               double threshold, std::string relation, bool asserted,
                               std::string details) {
  VerificationReport r;
  r.check_id = std::move(id);
  r.config = config;
  r.statistic = statistic;
  r.threshold = threshold;
  r.relation = std::move(relation);
  r.passed = r.relation == "<=" ? statistic <= threshold : statistic >= threshold;
  r.asserted = asserted;
  r.details = std::move(details);
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// -<u,v> / max(||u|| ||v||, eta), value only.
double cosine_loss(const Vector& u, const Vector& v) {
  return -u.dot(v) / std::max(u.norm() * v.norm(), kDefaultEta);
}

Vector normal_vector(RngStream& rng, std::size_t dim, double sigma = 1.0) {
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sigma * rng.normal();
  return v;
}

std::vector<std::size_t> support_of(const std::vector<int>& bits) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0) out.push_back(i);
  }
  return out;
}

// Order statistic at ceil(q n), 1-based.
double quantile(std::vector<double> v, double q) {
  const auto n = v.size();
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

double median(std::vector<double> v) {
  const auto n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

using BatchMap = std::function<Matrix(const Matrix&)>;

AEParams random_mlp(RngStream& rng, std::size_t dim, std::size_t hidden) {
  return init_autoencoder({dim, hidden, dim}, {Activation::tanh, Activation::identity}, rng);
}

}  // namespace

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("spearman_correlation: length mismatch");
  if (a.size() < 2) throw ConfigError("spearman_correlation: need at least two points");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("log_log_slope: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<VerificationReport> check_lemma_collinearity(const LemmaCheckConfig& cfg) {
  const std::string id = "lemma_collinearity";
  const nlohmann::json conf = cfg;
  const RngStream base(cfg.seed, fnv1a64(id));
  if (cfg.dim < 2) throw DimensionError(id + ": D must be >= 2");

  RngStream dir_rng = base.split(fnv1a64("direction"));
  const Vector u = normal_vector(dir_rng, cfg.dim).normalized();

  std::vector<VerificationReport> out;
  auto run = [&](const std::string& label, const NoiseSpec& noise, double signal_norm) {
    RngStream rng = base.split(fnv1a64(label));
    const Vector s = signal_norm * u;
    RunningVec coords(static_cast<Eigen::Index>(cfg.dim));
    Running par;
    Vector eps(static_cast<Eigen::Index>(cfg.dim));
    for (std::size_t i = 0; i < cfg.n_draws; ++i) {
      fill_isotropic_noise(rng, noise, eps);
      const Vector x = s + eps;
      const Vector y = x / x.norm();
      coords.push(y);
      par.push(u.dot(y));
    }
    const Vector var = coords.variance();
    const double n = static_cast<double>(cfg.n_draws);
    const Vector& m = coords.mean;

    if (signal_norm == 0.0) {
      const double se = std::sqrt(var.sum() / n);
      out.push_back(make_report(id + "/" + label, conf, m.norm() / se, 4.0, "<=", true,
                                "||mean x/||x|| || = " + fmt(m.norm()) + ", MC sigma " + fmt(se)));
      return;
    }
    const Vector resid = m - m.dot(u) * u;
    const double se_orth = std::sqrt(std::max(var.sum() - par.variance(), 0.0) / n);
    out.push_back(make_report(id + "/" + label + "/orthogonal", conf, resid.norm() / se_orth, 4.0,
                              "<=", true,
                              "residual norm " + fmt(resid.norm()) + ", MC sigma " + fmt(se_orth)));

    RngStream oracle_rng = base.split(fnv1a64(label + "/oracle"));
    const MonteCarloValue k =
        k_oracle_isotropic(oracle_rng, signal_norm, cfg.dim, noise, cfg.oracle_samples);
    const double combined = std::sqrt(par.std_error() * par.std_error() + k.std_error * k.std_error);
    out.push_back(make_report(id + "/" + label + "/parallel", conf,
                              std::abs(par.mean - k.mean) / combined, 3.0, "<=", true,
                              "parallel " + fmt(par.mean) + " vs k oracle " + fmt(k.mean) +
                                  ", combined sigma " + fmt(combined)));
  };

  run("gaussian", NoiseSpec::gaussian(cfg.sigma), cfg.signal_norm);
  run("zero_signal", NoiseSpec::gaussian(cfg.sigma), 0.0);
  if (cfg.mixture_scales.size() != cfg.mixture_weights.size()) {
    throw ConfigError(id + ": mixture scales and weights differ in length");
  }
  std::vector<ScaleComponent> comps;
  for (std::size_t i = 0; i < cfg.mixture_scales.size(); ++i) {
    comps.push_back({cfg.mixture_scales[i], cfg.mixture_weights[i]});
  }
  if (!comps.empty()) run("mixture", NoiseSpec::scale_mixture(cfg.sigma, comps), cfg.signal_norm);
  return out;
}

std::vector<VerificationReport> check_theorem1_identity(const Theorem1CheckConfig& cfg) {
  const std::string id = "theorem1_identity";
  const nlohmann::json conf = cfg;
  const RngStream base(cfg.seed, fnv1a64(id));
  const std::size_t dim = cfg.mask.size();
  std::vector<VerificationReport> out;

  RngStream setup = base.split(fnv1a64("setup"));
  const Vector s_dir = normal_vector(setup, dim);
  const Vector v_const = normal_vector(setup, dim);
  const AEParams mlp = random_mlp(setup, dim, cfg.mlp_hidden);

  auto run = [&](const std::string& label, const std::vector<int>& bits, const BatchMap& h) {
    const auto support = support_of(bits);
    const std::size_t m = support.size();
    if (m < 2) {
      out.push_back(make_report(id + "/" + label, conf, static_cast<double>(m), 2.0, ">=", false,
                                "skipped: ||b||_1 < 2"));
      return;
    }
    const double target = cfg.c * cfg.sigma * std::sqrt(static_cast<double>(m));
    const Vector s = s_dir * (target / gather(s_dir, support).norm());
    const Vector bs = gather(s, support);

    RngStream oracle_rng = base.split(fnv1a64(label + "/oracle"));
    const MonteCarloValue k =
        k_oracle_isotropic(oracle_rng, target, m, NoiseSpec::gaussian(cfg.sigma), cfg.oracle_samples);

    RngStream rng = base.split(fnv1a64(label));
    Running diff, rhs, lhs;
    const std::size_t chunk = 4096;
    for (std::size_t start = 0; start < cfg.n_draws; start += chunk) {
      const auto cols = static_cast<Eigen::Index>(std::min(chunk, cfg.n_draws - start));
      Matrix x(static_cast<Eigen::Index>(dim), cols), z(static_cast<Eigen::Index>(dim), cols);
      for (Eigen::Index j = 0; j < cols; ++j) {
        x.col(j) = s + normal_vector(rng, dim, cfg.sigma);
        z.col(j) = s + normal_vector(rng, dim, cfg.sigma);
      }
      const Matrix sh = h(z);
      for (Eigen::Index j = 0; j < cols; ++j) {
        const Vector bsh = gather(sh.col(j), support);
        const double l = cosine_loss(bs, bsh);
        const double r = cosine_loss(gather(x.col(j), support), bsh);
        lhs.push(l);
        rhs.push(r);
        diff.push(l - r / k.mean);
      }
    }
    const double k_term = rhs.mean / (k.mean * k.mean) * k.std_error;
    const double combined = std::sqrt(diff.std_error() * diff.std_error() + k_term * k_term);
    out.push_back(make_report(id + "/" + label, conf, std::abs(diff.mean) / combined, 4.0, "<=", true,
                              "LHS " + fmt(lhs.mean) + ", RHS/k " + fmt(rhs.mean / k.mean) +
                                  ", k " + fmt(k.mean) + ", combined sigma " + fmt(combined)));
  };

  const std::vector<int> ones(dim, 1);
  run("identity", cfg.mask, [](const Matrix& z) { return z; });
  run("constant", cfg.mask, [&](const Matrix& z) {
    Matrix r(z.rows(), z.cols());
    r.colwise() = v_const;
    return r;
  });
  run("mlp", cfg.mask, [&](const Matrix& z) { return reconstruct(mlp, z); });
  run("all_ones", ones, [](const Matrix& z) { return z; });

  // Blind-spot x~ shares noise with x, so the identity holds only
  // approximately; reported, not asserted.
  if (cfg.bsm_draws > 0) {
    const GridShape shape = GridShape::image(cfg.bsm_height, cfg.bsm_width);
    const std::size_t d = shape.size();
    Vector s(static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < cfg.bsm_height; ++r) {
      for (std::size_t c = 0; c < cfg.bsm_width; ++c) {
        s[static_cast<Eigen::Index>(r * cfg.bsm_width + c)] =
            1.0 + std::sin(0.9 * static_cast<double>(r)) * std::cos(0.7 * static_cast<double>(c));
      }
    }
    s *= cfg.c * cfg.sigma * std::sqrt(static_cast<double>(d)) / s.norm();
    RngStream rng = base.split(fnv1a64("bsm"));
    RngStream k_rng = base.split(fnv1a64("bsm/k"));
    Running diff, lhs, rhs_k;
    for (std::size_t i = 0; i < cfg.bsm_draws; ++i) {
      const SignalVec x(Vector(s + normal_vector(rng, d, cfg.sigma)));
      MaskedPair pair = blind_spot_mask(rng, x, shape, cfg.bsm_rho, 1);
      while (pair.mask.count() < 2) pair = blind_spot_mask(rng, x, shape, cfg.bsm_rho, 1);
      const auto& support = pair.mask.support();
      const double m = static_cast<double>(support.size());
      const Vector bs = gather(s, support);
      const Vector bsh = gather(pair.x_tilde.values(), support);
      const double c_true = bs.norm() / (cfg.sigma * std::sqrt(m));
      const double k = estimate_k_mc(k_rng, c_true, support.size(), cfg.bsm_weight_samples).k_hat;
      const double l = cosine_loss(bs, bsh);
      const double r = cosine_loss(gather(x.values(), support), bsh) / k;
      lhs.push(l);
      rhs_k.push(r);
      diff.push(l - r);
    }
    out.push_back(make_report(id + "/blind_spot", conf, std::abs(diff.mean) / diff.std_error(), 4.0,
                              "<=", false,
                              "informational: LHS " + fmt(lhs.mean) + ", RHS/k " + fmt(rhs_k.mean) +
                                  ", gap " + fmt(diff.mean) + " (" +
                                  fmt(std::abs(diff.mean) / diff.std_error()) + " MC sigma)"));
  }
  return out;
}

std::vector<VerificationReport> check_theorem2_decay(const Theorem2CheckConfig& cfg) {
  const std::string id = "theorem2_decay";
  const nlohmann::json conf = cfg;
  const RngStream base(cfg.seed, fnv1a64(id));
  const NoiseSpec noise = NoiseSpec::gaussian(cfg.sigma);
  const double var = cfg.sigma * cfg.sigma;
  std::vector<VerificationReport> out;

  for (std::size_t ci = 0; ci < cfg.c_grid.size(); ++ci) {
    const double c = cfg.c_grid[ci];
    const std::string tag = "c=" + fmt(c);
    std::vector<double> dims, medians;
    std::string trace;
    for (std::size_t dim : cfg.dims) {
      RngStream rng = base.split(ci).split(dim);
      const auto d = static_cast<Eigen::Index>(dim);
      const Vector s = Vector::Constant(d, c * cfg.sigma);
      Vector eps(d), eps_t(d);
      std::vector<double> errors;
      errors.reserve(cfg.trials);
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        fill_isotropic_noise(rng, noise, eps);
        fill_isotropic_noise(rng, noise, eps_t);
        errors.push_back(std::abs(c - estimate_c(s + eps, s + eps_t)));
      }
      const double med = median(errors);
      dims.push_back(static_cast<double>(dim));
      medians.push_back(med);
      trace += " D=" + std::to_string(dim) + ":" + fmt(med);

      const double q = quantile(errors, 1.0 - cfg.delta);
      const double bound = theorem2_bound(c, var, var, cfg.delta, dim);
      const bool applicable = theorem2_applicable(c, var, var, cfg.delta, dim);
      out.push_back(make_report(
          id + "/bound_" + tag + "_D=" + std::to_string(dim), conf, q, bound, "<=", applicable,
          applicable ? "(1-delta) quantile of |c - c^| vs bound"
                     : "skipped: D below D_min = " + fmt(theorem2_min_dim(c, var, var, cfg.delta)) +
                           " or delta >= delta_c"));
    }
    out.push_back(make_report(id + "/slope_" + tag, conf, log_log_slope(dims, medians),
                              cfg.max_slope, "<=", true, "median |c - c^|:" + trace));
  }
  return out;
}

std::vector<VerificationReport> check_theorem3_limit(const Theorem3CheckConfig& cfg) {
  const std::string id = "theorem3_limit";
  const nlohmann::json conf = cfg;
  const RngStream base(cfg.seed, fnv1a64(id));
  const NoiseSpec noise = NoiseSpec::gaussian(cfg.sigma);
  std::vector<VerificationReport> out;

  for (std::size_t ci = 0; ci < cfg.c_grid.size(); ++ci) {
    const double c = cfg.c_grid[ci];
    const std::string tag = "c=" + fmt(c);
    const double limit = k_closed_form(c);
    std::vector<double> dims, gaps;
    std::string trace;
    for (std::size_t dim : cfg.dims) {
      RngStream rng = base.split(ci).split(dim);
      const double norm = c * cfg.sigma * std::sqrt(static_cast<double>(dim));
      const MonteCarloValue k = k_oracle_isotropic(rng, norm, dim, noise, cfg.oracle_samples);
      dims.push_back(static_cast<double>(dim));
      gaps.push_back(std::abs(k.mean - limit));
      trace += " D=" + std::to_string(dim) + ":" + fmt(k.mean) + "+-" + fmt(k.std_error);
    }
    out.push_back(make_report(id + "/slope_" + tag, conf, log_log_slope(dims, gaps), cfg.max_slope,
                              "<=", true, "limit " + fmt(limit) + ", k oracle" + trace));
    out.push_back(make_report(id + "/gap_" + tag + "_D=" + std::to_string(cfg.dims.back()), conf,
                              gaps.back(), cfg.gap_tolerance, "<=", true,
                              "target " + fmt(limit) + ", gap " + fmt(gaps.back())));
  }

  // c = 0: the integrand is odd, k = 0 for every D.
  double worst = 0.0;
  std::string trace;
  for (std::size_t dim : cfg.dims) {
    RngStream rng = base.split(fnv1a64("c=0")).split(dim);
    const MonteCarloValue k = k_oracle_isotropic(rng, 0.0, dim, noise, cfg.oracle_samples);
    worst = std::max(worst, std::abs(k.mean) / k.std_error);
    trace += " D=" + std::to_string(dim) + ":" + fmt(k.mean);
  }
  out.push_back(make_report(id + "/zero_signal", conf, worst, 4.0, "<=", true,
                            "max |k|/MC sigma over D;" + trace));
  return out;
}

std::vector<VerificationReport> check_prop_b1_n2v(const PropB1CheckConfig& cfg) {
  const std::string id = "prop_b1_n2v";
  const nlohmann::json conf = cfg;
  const RngStream base(cfg.seed, fnv1a64(id));
  std::vector<VerificationReport> out;

  // (i) E_b ||b.(s^ - s)||^2 == rho ||s^ - s||^2, two independent routes.
  {
    RngStream rng = base.split(fnv1a64("identity"));
    const double rho = cfg.rho;
    double worst = 0.0;
    const std::size_t ne = cfg.enumeration_dim;
    for (std::size_t i = 0; i < cfg.n_inputs; ++i) {
      const Vector r = normal_vector(rng, cfg.dim) - normal_vector(rng, cfg.dim);
      const double target = rho * r.squaredNorm();
      double per_coord = 0.0;
      for (Eigen::Index d = 0; d < r.size(); ++d) per_coord += rho * r[d] * r[d];
      worst = std::max(worst, std::abs(per_coord - target) / target);

      // Exhaustive sum over all 2^ne masks on a shorter vector.
      const Vector re = normal_vector(rng, ne);
      double enumerated = 0.0;
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << ne); ++bits) {
        double prob = 1.0, value = 0.0;
        for (std::size_t d = 0; d < ne; ++d) {
          if ((bits >> d) & 1U) {
            prob *= rho;
            value += re[static_cast<Eigen::Index>(d)] * re[static_cast<Eigen::Index>(d)];
          } else {
            prob *= 1.0 - rho;
          }
        }
        enumerated += prob * value;
      }
      const double target_e = rho * re.squaredNorm();
      worst = std::max(worst, std::abs(enumerated - target_e) / target_e);
    }
    out.push_back(make_report(id + "/rho_factor", conf, worst, cfg.identity_tolerance, "<=", true,
                              "max relative discrepancy over " + std::to_string(cfg.n_inputs) +
                                  " inputs (per-coordinate and exhaustive mask sums)"));
  }

  // (ii) E_e ||b.s^ - b.x||^2 - ||b.s^ - b.s||^2 does not depend on s^.
  {
    RngStream rng = base.split(fnv1a64("offset"));
    const Vector s = normal_vector(rng, cfg.dim);
    const MaskVec b = draw_mask(rng, cfg.dim, cfg.offset_rho);
    const Vector bv = b.as_vector();
    double worst = 0.0;
    std::string trace;
    for (std::size_t p = 0; p < cfg.n_pairs; ++p) {
      const Vector s1 = normal_vector(rng, cfg.dim);
      const Vector s2 = normal_vector(rng, cfg.dim);
      const double clean1 = bv.cwiseProduct(s1 - s).squaredNorm();
      const double clean2 = bv.cwiseProduct(s2 - s).squaredNorm();
      Running d, o1;
      for (std::size_t i = 0; i < cfg.n_draws; ++i) {
        const Vector x = s + normal_vector(rng, cfg.dim, cfg.sigma);
        const double a = bv.cwiseProduct(s1 - x).squaredNorm() - clean1;
        const double c = bv.cwiseProduct(s2 - x).squaredNorm() - clean2;
        o1.push(a);
        d.push(a - c);
      }
      worst = std::max(worst, std::abs(d.mean) / d.std_error());
      trace += " " + fmt(o1.mean);
    }
    const double expected = static_cast<double>(b.count()) * cfg.sigma * cfg.sigma;
    out.push_back(make_report(id + "/offset", conf, worst, 3.0, "<=", true,
                              "max |offset1 - offset2| / MC sigma over pairs; offsets" + trace +
                                  " (||b||_1 sigma^2 = " + fmt(expected) + ")"));
  }

  // (iii) s^ == s: the clean masked loss is 0 and the noisy one averages rho D sigma^2.
  {
    RngStream rng = base.split(fnv1a64("self"));
    Running noisy;
    double clean_max = 0.0;
    const Vector s = normal_vector(rng, cfg.dim);
    for (std::size_t i = 0; i < cfg.n_draws; ++i) {
      const Vector x = s + normal_vector(rng, cfg.dim, cfg.sigma);
      Vector bv(static_cast<Eigen::Index>(cfg.dim));
      // Plain Bernoulli draws: the expectation is over all masks, the empty one included.
      for (Eigen::Index d = 0; d < bv.size(); ++d) bv[d] = rng.uniform() < cfg.rho ? 1.0 : 0.0;
      clean_max = std::max(clean_max, bv.cwiseProduct(s - s).squaredNorm());
      noisy.push(bv.cwiseProduct(s - x).squaredNorm());
    }
    const double expected = cfg.rho * static_cast<double>(cfg.dim) * cfg.sigma * cfg.sigma;
    out.push_back(make_report(id + "/self_clean", conf, clean_max, 0.0, "<=", true,
                              "max clean masked loss at s^ == s"));
    out.push_back(make_report(id + "/self_noisy", conf, std::abs(noisy.mean - expected) / noisy.std_error(),
                              4.0, "<=", true,
                              "noisy masked loss " + fmt(noisy.mean) + " vs rho D sigma^2 " +
                                  fmt(expected)));
  }
  return out;
}

std::vector<VerificationReport> check_prop1_correlation(const Prop1CheckConfig& cfg) {
  const std::string id = "prop1_correlation";
  const nlohmann::json conf = cfg;
  const RngStream base(cfg.seed, fnv1a64(id));
  RngStream setup = base.split(fnv1a64("setup"));
  Vector s = normal_vector(setup, cfg.dim);
  s *= cfg.sigma * std::sqrt(static_cast<double>(cfg.dim)) / s.norm();

  std::vector<double> masked, supervised;
  std::size_t filtered = 0;
  for (std::size_t j = 0; j < cfg.n_maps; ++j) {
    RngStream rng = base.split(j);
    const double lambda = rng.uniform();
    const AEParams g = random_mlp(rng, cfg.dim, cfg.mlp_hidden);
    Matrix z(static_cast<Eigen::Index>(cfg.dim), static_cast<Eigen::Index>(cfg.n_draws));
    for (Eigen::Index i = 0; i < z.cols(); ++i) z.col(i) = s + normal_vector(rng, cfg.dim, cfg.sigma);
    const Matrix sh = lambda * z + (1.0 - lambda) * reconstruct(g, z);
    Running m, sup;
    for (Eigen::Index i = 0; i < sh.cols(); ++i) {
      std::vector<std::size_t> support;
      for (std::size_t d = 0; d < cfg.dim; ++d) {
        if (rng.uniform() < cfg.rho) support.push_back(d);
      }
      const Vector col = sh.col(i);
      m.push(cosine_loss(gather(col, support), gather(s, support)));
      sup.push(cosine_loss(col, s));
    }
    if (m.variance() == 0.0 || sup.variance() == 0.0) {
      ++filtered;
      continue;
    }
    masked.push_back(m.mean);
    supervised.push_back(sup.mean);
  }
  const double rho_s = masked.size() >= 3 ? spearman_correlation(masked, supervised) : -1.0;
  return {make_report(id, conf, rho_s, cfg.min_correlation, ">=", true,
                      "Spearman over " + std::to_string(masked.size()) + " maps (" +
                          std::to_string(filtered) + " zero-variance maps filtered)")};
}

const std::vector<std::string>& check_ids() {
  static const std::vector<std::string> ids{"lemma_collinearity", "theorem1_identity",
                                            "theorem2_decay",     "theorem3_limit",
                                            "prop_b1_n2v",        "prop1_correlation"};
  return ids;
}

namespace {

// Strict parse: every key must name a field and every value must convert.
template <typename Config>
Config parse_check_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("check config must be a JSON object");
  const nlohmann::json known = Config{};
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) throw ConfigError("unknown check config key '" + item.key() + "'");
  }
  try {
    return j.get<Config>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad check config value: ") + e.what());
  }
}

}  // namespace

std::vector<VerificationReport> run_check(std::string_view id, const nlohmann::json& config) {
  const std::string_view name = id.substr(0, id.find('/'));
  const nlohmann::json c = config.is_null() ? nlohmann::json::object() : config;
  if (name == "lemma_collinearity") return check_lemma_collinearity(parse_check_config<LemmaCheckConfig>(c));
  if (name == "theorem1_identity") return check_theorem1_identity(parse_check_config<Theorem1CheckConfig>(c));
  if (name == "theorem2_decay") return check_theorem2_decay(parse_check_config<Theorem2CheckConfig>(c));
  if (name == "theorem3_limit") return check_theorem3_limit(parse_check_config<Theorem3CheckConfig>(c));
  if (name == "prop_b1_n2v") return check_prop_b1_n2v(parse_check_config<PropB1CheckConfig>(c));
  if (name == "prop1_correlation") return check_prop1_correlation(parse_check_config<Prop1CheckConfig>(c));
  throw ConfigError("unknown check '" + std::string(id) + "'");
}

std::vector<VerificationReport> run_checks(std::string_view id, std::uint64_t seed) {
  const nlohmann::json config{{"seed", seed}};
  if (id != "all") return run_check(id, config);
  std::vector<VerificationReport> out;
  for (const auto& name : check_ids()) {
    auto part = run_check(name, config);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

bool all_asserted_passed(const std::vector<VerificationReport>& reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const VerificationReport& r) { return !r.asserted || r.passed; });
}

}  // namespace dcs
