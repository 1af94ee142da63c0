#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "dcs/error.hpp"
#include "dcs/masking.hpp"
#include "test_support.hpp"

using namespace dcs;

namespace {

// 0.99 quantiles of the chi-square distribution.
constexpr double kChi2Crit3 = 11.344866730144373;
constexpr double kChi2Crit7 = 18.475306906582357;

SignalVec iota_signal(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i) + 0.5;
  return SignalVec(v);
}

void check_unmasked_copied(const MaskedPair& p) {
  double off_support = 0.0;
  for (std::size_t d = 0; d < p.x.dim(); ++d) {
    if (!p.mask[d]) off_support += std::abs(p.x[d] - p.x_tilde[d]);
  }
  CHECK(off_support == 0.0);
}

}  // namespace

TEST_CASE("draw_mask Bernoulli rate and domain") {
  RngStream rng(1, 0);
  double frac = 0.0;
  for (int i = 0; i < 100; ++i) {
    const MaskVec b = draw_mask(rng, 100000, 0.1);
    CHECK(b.rho() == 0.1);
    frac += static_cast<double>(b.count()) / 1e5;
  }
  CHECK(std::abs(frac / 100.0 - 0.1) < 0.003);

  CHECK_NOTHROW(draw_mask(rng, 10, 0.999));
  CHECK_THROWS_AS(draw_mask(rng, 10, 1.0), ConfigError);
  CHECK_THROWS_AS(draw_mask(rng, 10, 0.0), ConfigError);
  CHECK_THROWS_AS(draw_mask(rng, 10, -0.2), ConfigError);

  // Tiny rho on a short vector: the empty mask would be common without the redraw.
  for (int i = 0; i < 1000; ++i) REQUIRE(draw_mask(rng, 3, 0.01).count() >= 1);
}

TEST_CASE("mask popcount matches support") {
  RngStream rng(2, 0);
  const MaskVec b = draw_mask(rng, 50, 0.3);
  std::size_t ones = 0;
  for (auto bit : b.bits()) {
    REQUIRE((bit == 0 || bit == 1));
    ones += bit;
  }
  CHECK(ones == b.count());
  CHECK(b.as_vector().sum() == static_cast<double>(ones));
}

TEST_CASE("per-coordinate selection probability") {
  RngStream rng(3, 0);
  const std::size_t dim = 64, n = 10000;
  const double rho = 0.1;
  std::vector<double> hits(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const MaskVec b = draw_mask(rng, dim, rho);
    for (auto d : b.support()) hits[d] += 1.0;
  }
  const double sd = std::sqrt(rho * (1 - rho) / double(n));
  for (double h : hits) CHECK(std::abs(h / double(n) - rho) < 4.0 * sd);
}

TEST_CASE("blind-spot masking contracts") {
  RngStream rng(4, 0);
  const GridShape shape = GridShape::image(5, 7);
  const SignalVec x = iota_signal(35);
  for (int i = 0; i < 200; ++i) {
    const MaskedPair p = blind_spot_mask(rng, x, shape, 0.3, 1);
    check_unmasked_copied(p);
    CHECK(p.x == x);
    // Replacement comes from the clipped 3x3 patch and is never the pixel itself
    // (values are distinct here, so equality would mean the center was chosen).
    for (auto d : p.mask.support()) {
      const auto r = static_cast<long>(d / 7), c = static_cast<long>(d % 7);
      const auto src = static_cast<long>(p.x_tilde[d] - 0.5);
      const long sr = src / 7, sc = src % 7;
      CHECK(src != static_cast<long>(d));
      CHECK(std::abs(sr - r) <= 1);
      CHECK(std::abs(sc - c) <= 1);
    }
  }

  const SignalVec constant(std::vector<double>(16, 7.0));
  for (int i = 0; i < 50; ++i) {
    CHECK(blind_spot_mask(rng, constant, GridShape::image(4, 4), 0.5).x_tilde == constant);
  }

  CHECK_THROWS_AS(blind_spot_mask(rng, SignalVec(std::vector<double>{1.0}), GridShape::image(1, 1), 0.5),
                  ConfigError);
  CHECK_THROWS_AS(blind_spot_mask(rng, x, GridShape::image(5, 6), 0.5), DimensionError);
  CHECK_THROWS_AS(blind_spot_mask(rng, x, shape, 0.5, 0), ConfigError);
}

TEST_CASE("blind-spot neighbor draw is uniform over the 8 neighbors") {
  RngStream rng(5, 0);
  const SignalVec x = iota_signal(9);
  // Exhaustive enumeration: the neighbors of the center of a 3x3 grid.
  std::map<double, std::size_t> counts;
  for (std::size_t d : {0, 1, 2, 3, 5, 6, 7, 8}) counts[x[d]] = 0;
  std::size_t draws = 0;
  while (draws < 10000) {
    const MaskedPair p = blind_spot_mask(rng, x, GridShape::image(3, 3), 0.5, 1);
    if (!p.mask[4]) continue;
    REQUIRE(counts.count(p.x_tilde[4]) == 1);
    ++counts[p.x_tilde[4]];
    ++draws;
  }
  std::vector<std::size_t> c;
  for (auto& [k, v] : counts) c.push_back(v);
  CHECK(dcs::testing::chi_square_uniform_statistic(c) < kChi2Crit7);
}

TEST_CASE("blind-spot corner pixel only sees in-image neighbors") {
  RngStream rng(6, 0);
  const SignalVec x = iota_signal(16);
  std::set<double> seen;
  for (int i = 0; i < 2000; ++i) {
    const MaskedPair p = blind_spot_mask(rng, x, GridShape::image(4, 4), 0.5, 1);
    if (p.mask[0]) seen.insert(p.x_tilde[0]);
  }
  CHECK(seen == std::set<double>{x[1], x[4], x[5]});
}

TEST_CASE("tau-AMN masking contracts") {
  RngStream rng(7, 0);
  const SignalVec x = iota_signal(40);
  for (int i = 0; i < 200; ++i) {
    const MaskedPair p = tau_amn_mask(rng, x, 0.3, 2);
    check_unmasked_copied(p);
    for (auto t : p.mask.support()) {
      const auto src = static_cast<long>(p.x_tilde[t] - 0.5);
      const long off = src - static_cast<long>(t);
      CHECK(off != 0);
      CHECK(std::abs(off) <= 2);
      CHECK(src >= 0);
      CHECK(src < 40);
    }
  }
  const SignalVec constant(std::vector<double>(12, -3.0));
  CHECK(tau_amn_mask(rng, constant, 0.5, 3).x_tilde == constant);
  CHECK_THROWS_AS(tau_amn_mask(rng, SignalVec(std::vector<double>{1.0}), 0.3, 2), ConfigError);
  CHECK_THROWS_AS(tau_amn_mask(rng, x, 0.3, 0), ConfigError);
}

TEST_CASE("tau-AMN window draw is uniform") {
  RngStream rng(8, 0);
  const SignalVec x = iota_signal(20);
  std::map<double, std::size_t> interior, edge;
  std::size_t n_interior = 0;
  while (n_interior < 8000) {
    const MaskedPair p = tau_amn_mask(rng, x, 0.3, 2);
    if (p.mask[10]) {
      ++interior[p.x_tilde[10]];
      ++n_interior;
    }
    if (p.mask[0]) ++edge[p.x_tilde[0]];
  }
  REQUIRE(interior.size() == 4);
  std::vector<std::size_t> c;
  for (auto& [k, v] : interior) c.push_back(v);
  CHECK(dcs::testing::chi_square_uniform_statistic(c) < kChi2Crit3);
  // First step: only t+1 and t+2 are in range.
  CHECK(edge.size() == 2);
  CHECK(edge.count(x[1]) == 1);
  CHECK(edge.count(x[2]) == 1);
}

TEST_CASE("masked pair rejects inconsistent dimensions") {
  const SignalVec a(std::vector<double>{1, 2, 3});
  const SignalVec b(std::vector<double>{1, 2});
  CHECK_THROWS_AS(MaskedPair(a, b, MaskVec({1, 0, 0}, 0.5)), DimensionError);
  CHECK_THROWS_AS(MaskedPair(a, a, MaskVec({1, 0}, 0.5)), DimensionError);
  CHECK(gather(a.values(), {0, 2}) == Vector((Vector(2) << 1, 3).finished()));
}
