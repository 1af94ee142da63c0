#include <doctest.h>

#include <cmath>
#include <cstring>

#include "dcs/error.hpp"
#include "dcs/losses.hpp"
#include "test_support.hpp"

using namespace dcs;
using dcs::testing::finite_difference;
using dcs::testing::max_relative_error;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

Vector random_vec(RngStream& rng, std::size_t n, double scale = 1.0) {
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& e : v) e = scale * rng.normal();
  return v;
}

MaskedPair random_pair(RngStream& rng, std::size_t n, double rho) {
  const Vector x = random_vec(rng, n);
  MaskVec b = draw_mask(rng, n, rho);
  while (b.count() < 2) b = draw_mask(rng, n, rho);
  Vector xt = x;
  for (auto d : b.support()) xt[static_cast<Eigen::Index>(d)] += rng.normal();
  return MaskedPair(SignalVec(x), SignalVec(xt), b);
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

constexpr double kFdTol = 1e-4;

}  // namespace

TEST_CASE("cosine loss examples") {
  CHECK(cs_loss(vec({1, 2, 3}), vec({1, 2, 3})).value == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(cs_loss(vec({1, 0}), vec({0, 1})).value == 0.0);
  CHECK(cs_loss(vec({1, 1}), vec({-1, -1})).value == doctest::Approx(1.0).epsilon(1e-15));
  // Active guard: gradient is -u / eta.
  const auto g = cs_loss(vec({1e-5, 0}), vec({0, 1e-5}), 1e-8);
  CHECK(g.value == 0.0);
  CHECK(g.grad[0] == doctest::Approx(-1e-5 / 1e-8));
  CHECK_THROWS_AS(cs_loss(vec({1, 2}), vec({1, 2, 3})), DimensionError);
}

TEST_CASE("mse and n2v examples") {
  CHECK(mse_loss(vec({1, 2}), vec({1, 2})).value == 0.0);
  const auto m = mse_loss(vec({1, 0}), vec({0, 1}));
  CHECK(m.value == 2.0);
  CHECK(m.grad == vec({-2, 2}));

  const MaskedPair p(SignalVec(vec({2, 9})), SignalVec(vec({4, 9})), MaskVec({1, 0}, 0.5));
  const auto n = n2v_loss(p, vec({5, 9}));
  CHECK(n.value == 9.0);
  CHECK(n.grad == vec({6, 0}));
  CHECK(n2v_loss(p, vec({2, -40})).value == 0.0);
  CHECK(n2v_loss(p, vec({2, -40})).grad[1] == 0.0);
}

TEST_CASE("dcs examples") {
  const MaskedPair p(SignalVec(vec({1, 2, 3, 4})), SignalVec(vec({0, 2, 1, 4})),
                     MaskVec({1, 0, 1, 0}, 0.5));
  CHECK(dcs_loss(p, p.x.values(), 1.0).value == doctest::Approx(-1.0).epsilon(1e-15));

  const Vector sh = vec({0.3, -7, 2, 11});
  const auto one = dcs_loss(p, sh, 1.0);
  const auto half = dcs_loss(p, sh, 0.5);
  CHECK(half.value == 2.0 * one.value);
  CHECK(half.grad == 2.0 * one.grad);

  for (double factor : {0.01, 1.0, 250.0}) {
    Vector prop = factor * p.x.values();
    prop[1] = -3.0;  // off the support, ignored
    CHECK(dcs_loss(p, prop, 0.4).value == doctest::Approx(-1.0 / 0.4).epsilon(1e-14));
  }
}

TEST_CASE("dcs with unit weight equals cosine on the masked subvectors") {
  RngStream rng(30, 0);
  for (int i = 0; i < 100; ++i) {
    const MaskedPair p = random_pair(rng, 12, 0.4);
    const Vector sh = random_vec(rng, 12);
    const auto& sup = p.mask.support();
    const auto d = dcs_loss(p, sh, 1.0);
    const auto c = cs_loss(gather(p.x.values(), sup), gather(sh, sup));
    CHECK(same_bits(d.value, c.value));
    for (std::size_t j = 0; j < sup.size(); ++j) {
      CHECK(same_bits(d.grad[static_cast<Eigen::Index>(sup[j])], c.grad[static_cast<Eigen::Index>(j)]));
    }
  }
}

TEST_CASE("approximate dcs weight") {
  CHECK(dcs_approx_weight(1.0, 0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(dcs_approx_weight(1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-7));
  CHECK(dcs_approx_weight(1e6) == doctest::Approx(1.0).epsilon(1e-9));

  const MaskedPair same(SignalVec(vec({1, 2})), SignalVec(vec({1, 2})), MaskVec({1, 1}, 0.5));
  CHECK_THROWS_AS(dcs_loss_approx(same, vec({0, 1})), DegenerateInputError);

  // Large pair at c = 1: closed-form weight vs the Monte Carlo weight.
  RngStream rng(31, 0);
  const std::size_t dim = 4096;
  const Vector s = Vector::Ones(dim);
  Vector x = s + random_vec(rng, dim), xt = s + random_vec(rng, dim);
  const MaskedPair p(SignalVec(x), SignalVec(xt), MaskVec(std::vector<std::uint8_t>(dim, 1), 0.5));
  const Vector sh = s + 0.5 * random_vec(rng, dim);
  const double c_hat = estimate_c(p);
  const auto w = estimate_k_mc(rng, c_hat, dim, 100000);
  const double mc = dcs_loss(p, sh, w.k_hat).value;
  const double approx = dcs_loss_approx(p, sh).value;
  CHECK(std::abs(approx - mc) <= 0.01 * std::abs(mc));
}

TEST_CASE("cosine loss range and scale invariance") {
  RngStream rng(32, 0);
  for (int i = 0; i < 200; ++i) {
    const Vector u = random_vec(rng, 7), v = random_vec(rng, 7);
    const auto base = cs_loss(u, v);
    CHECK(base.value >= -1.0);
    CHECK(base.value <= 1.0);
    // Powers of two leave every rounding step unchanged.
    for (double alpha : {0.25, 2.0, 1024.0}) {
      const auto scaled = cs_loss(u, alpha * v);
      CHECK(same_bits(scaled.value, base.value));
      CHECK(max_relative_error(scaled.grad, base.grad / alpha, 1e-12) <= 1e-15);
    }
    const double alpha = 0.1 + 5.0 * rng.uniform();
    CHECK(cs_loss(u, alpha * v).value == doctest::Approx(base.value).epsilon(1e-14));
    // The gradient is orthogonal to v.
    CHECK(std::abs(base.grad.dot(v)) <= 1e-12 * v.norm() * base.grad.norm() + 1e-15);
  }
}

TEST_CASE("analytic gradients match central differences") {
  RngStream rng(33, 0);
  const std::size_t n = 10;
  int checked_cs = 0;
  for (int i = 0; i < 100; ++i) {
    const Vector x = random_vec(rng, n);
    const Vector sh = random_vec(rng, n);
    const MaskedPair p = random_pair(rng, n, 0.5);
    const double k = 0.2 + rng.uniform();

    const auto check = [&](const std::function<LossValue(const Vector&)>& loss, const Vector& at) {
      const Vector fd = finite_difference([&](const Vector& v) { return loss(v).value; }, at, 1e-5);
      CHECK(max_relative_error(loss(at).grad, fd) <= kFdTol);
    };
    // Skip the measure-zero neighborhood of the cosine guard.
    if (x.norm() * sh.norm() > 10.0 * kDefaultEta) {
      check([&](const Vector& v) { return cs_loss(x, v); }, sh);
      ++checked_cs;
    }
    check([&](const Vector& v) { return mse_loss(x, v); }, sh);
    check([&](const Vector& v) { return n2v_loss(p, v); }, sh);
    check([&](const Vector& v) { return dcs_loss(p, v, k); }, sh);
    check([&](const Vector& v) { return dcs_loss_approx(p, v); }, sh);
  }
  CHECK(checked_cs == 100);
}

TEST_CASE("masked losses leave off-support gradients at zero") {
  RngStream rng(34, 0);
  for (int i = 0; i < 50; ++i) {
    const MaskedPair p = random_pair(rng, 16, 0.3);
    const Vector sh = random_vec(rng, 16);
    for (const auto& g : {n2v_loss(p, sh).grad, dcs_loss(p, sh, 0.7).grad, dcs_loss_approx(p, sh).grad}) {
      for (std::size_t d = 0; d < 16; ++d) {
        if (!p.mask[d]) CHECK(g[static_cast<Eigen::Index>(d)] == 0.0);
      }
    }
  }
}

TEST_CASE("masked squared error expectation carries a factor rho") {
  // E_b ||b.(s^ - s)||^2 summed exactly over coordinates.
  RngStream rng(35, 0);
  for (int i = 0; i < 100; ++i) {
    const double rho = 0.05 + 0.9 * rng.uniform();
    const Vector diff = random_vec(rng, 32, 3.0);
    double expectation = 0.0;
    for (double v : diff) expectation += rho * v * v;
    CHECK(std::abs(expectation - rho * diff.squaredNorm()) <= 1e-12 * (1.0 + rho * diff.squaredNorm()));
  }
}

TEST_CASE("noisy-target offset does not depend on the reconstruction") {
  RngStream rng(36, 0);
  const std::size_t n = 12;
  const double sigma = 0.5;
  const Vector s = random_vec(rng, n);
  const MaskVec b({1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1}, 0.5);
  const Vector bv = b.as_vector();
  const Vector s1 = random_vec(rng, n), s2 = random_vec(rng, n, 2.0);
  const std::size_t draws = 100000;
  std::vector<double> d1, d2;
  for (std::size_t t = 0; t < draws; ++t) {
    const Vector x = s + random_vec(rng, n, sigma);
    d1.push_back(bv.cwiseProduct(s1 - x).squaredNorm() - bv.cwiseProduct(s1 - s).squaredNorm());
    d2.push_back(bv.cwiseProduct(s2 - x).squaredNorm() - bv.cwiseProduct(s2 - s).squaredNorm());
  }
  const double m1 = dcs::testing::mean(d1), m2 = dcs::testing::mean(d2);
  const double se = std::sqrt(dcs::testing::variance(d1) / draws + dcs::testing::variance(d2) / draws);
  CHECK(std::abs(m1 - m2) <= 3.0 * se);
  // Both equal ||b||_1 sigma^2.
  CHECK(std::abs(m1 - double(b.count()) * sigma * sigma) <= 4.0 * std::sqrt(dcs::testing::variance(d1) / draws));
}

TEST_CASE("loss kind names") {
  for (auto k : {LossKind::mse, LossKind::cs, LossKind::n2v, LossKind::dcs, LossKind::dcs_approx}) {
    CHECK(parse_loss_kind(to_string(k)) == k);
  }
  CHECK(to_string(LossKind::dcs_approx) == "dcs-approx");
  CHECK_THROWS_AS(parse_loss_kind("l1"), ConfigError);
  CHECK(is_masked(LossKind::dcs));
  CHECK(is_masked(LossKind::n2v));
  CHECK_FALSE(is_masked(LossKind::cs));
  CHECK_FALSE(is_masked(LossKind::mse));
}

TEST_CASE("batch risk contracts") {
  RngStream rng(37, 0);
  std::vector<SignalVec> batch;
  for (int i = 0; i < 8; ++i) batch.emplace_back(random_vec(rng, 16));
  const Reconstructor shrink = [](const Vector& v) { Vector out = 0.8 * v; out[0] += 0.1; return out; };

  for (auto kind : {LossKind::mse, LossKind::cs, LossKind::n2v, LossKind::dcs, LossKind::dcs_approx}) {
    LossConfig cfg;
    cfg.kind = kind;
    cfg.grid = GridShape::image(4, 4);
    cfg.rho = 0.3;
    const RngStream root(38, 0);

    SUBCASE("singleton batch equals the per-sample loss") {
      std::vector<RngStream> streams{root.split(0)};
      const auto risk = batch_risk(std::span<const SignalVec>(batch.data(), 1), shrink, cfg, streams);
      RngStream again = root.split(0);
      const auto prep = prepare_sample(again, batch[0], cfg);
      const auto lv = evaluate_loss(prep, batch[0], shrink(prep.network_input), cfg);
      CHECK(risk.batch_size == 1);
      CHECK(same_bits(risk.mean_value, lv.value));
    }
    SUBCASE("duplicating every sample keeps the mean") {
      const auto risk = batch_risk(batch, shrink, cfg, root);
      std::vector<SignalVec> doubled;
      std::vector<RngStream> streams;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        for (int r = 0; r < 2; ++r) {
          doubled.push_back(batch[i]);
          streams.push_back(root.split(i));
        }
      }
      const auto risk2 = batch_risk(doubled, shrink, cfg, streams);
      CHECK(risk2.mean_value == doctest::Approx(risk.mean_value).epsilon(1e-14));
    }
    SUBCASE("deterministic") {
      const auto a = batch_risk(batch, shrink, cfg, root);
      const auto b = batch_risk(batch, shrink, cfg, root);
      CHECK(same_bits(a.mean_value, b.mean_value));
      REQUIRE(a.per_sample.size() == 8);
      double sum = 0.0;
      for (std::size_t i = 0; i < 8; ++i) {
        CHECK(same_bits(a.per_sample[i].value, b.per_sample[i].value));
        CHECK(a.per_sample[i].grad == b.per_sample[i].grad);
        sum += a.per_sample[i].value;
      }
      CHECK(same_bits(a.mean_value, sum / 8.0));
    }
  }

  LossConfig cfg;
  CHECK_THROWS_AS(batch_risk(std::span<const SignalVec>(), shrink, cfg, RngStream(1, 1)), ConfigError);
}

TEST_CASE("prepared dcs samples carry a floored weight and a masked input") {
  RngStream rng(39, 0);
  LossConfig cfg;
  cfg.kind = LossKind::dcs;
  cfg.grid = GridShape::image(4, 4);
  cfg.rho = 0.3;
  cfg.k_floor = 0.05;
  for (int i = 0; i < 50; ++i) {
    const SignalVec x(random_vec(rng, 16));
    const auto prep = prepare_sample(rng, x, cfg);
    REQUIRE(prep.pair.has_value());
    CHECK(prep.pair->mask.count() >= 2);
    CHECK(prep.k_hat >= 0.05);
    CHECK(prep.network_input == prep.pair->x_tilde.values());
  }
  cfg.kind = LossKind::mse;
  const SignalVec x(random_vec(rng, 16));
  const auto prep = prepare_sample(rng, x, cfg);
  CHECK_FALSE(prep.pair.has_value());
  CHECK(prep.network_input == x.values());
}
