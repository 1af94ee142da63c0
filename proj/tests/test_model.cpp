#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dcs/error.hpp"
#include "dcs/model.hpp"
#include "gradient_check.hpp"
#include "test_support.hpp"

using namespace dcs;
using dcs::testing::flatten;

namespace {

Vector random_vec(RngStream& rng, std::size_t n, double scale = 1.0) {
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& e : v) e = scale * rng.normal();
  return v;
}

std::vector<SignalVec> random_dataset(RngStream& rng, std::size_t n, std::size_t dim) {
  std::vector<SignalVec> data;
  for (std::size_t i = 0; i < n; ++i) data.emplace_back(random_vec(rng, dim).cwiseAbs());
  return data;
}

// Two Gaussian blobs (or `classes` blobs) with rows as samples.
void blobs(RngStream& rng, std::size_t n, std::size_t dim, int classes, double separation,
           Matrix& x, std::vector<int>& y) {
  x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    for (std::size_t d = 0; d < dim; ++d) x(Eigen::Index(i), Eigen::Index(d)) = rng.normal();
    x(Eigen::Index(i), y[i] % Eigen::Index(dim)) += separation;
  }
}

}  // namespace

TEST_CASE("forward examples") {
  const AEParams id = identity_autoencoder(5);
  const Vector x = (Vector(5) << 1, -2, 3, 0.5, 9).finished();
  CHECK(forward(id, x).reconstruction == x);

  RngStream rng(40, 0);
  AEParams zero = init_autoencoder({5, 4, 2, 4, 5}, {Activation::relu, Activation::relu, Activation::relu,
                                                     Activation::relu}, rng);
  for (auto& l : zero.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  CHECK(forward(zero, x).reconstruction == Vector::Zero(5));

  const AEParams net = init_autoencoder({5, 7, 3, 7, 5}, rng);
  const auto a = forward(net, x), b = forward(net, x);
  CHECK(a.reconstruction == b.reconstruction);
  CHECK(a.encoding == b.encoding);
  CHECK(a.encoding.size() == 3);
  CHECK(net.code_dim() == 3);

  Matrix batch(5, 3);
  batch << x, 2 * x, -x;
  const auto fb = forward(net, batch);
  CHECK(fb.reconstruction.col(0) == a.reconstruction);
  CHECK(reconstruct(net, batch) == fb.reconstruction);
  CHECK(encode(net, batch) == fb.encoding);
  CHECK_THROWS_AS(forward(net, Vector(Vector::Ones(4))), DimensionError);
}

TEST_CASE("init validates shapes") {
  RngStream rng(41, 0);
  CHECK_THROWS_AS(init_autoencoder({5, 3, 4}, rng), ConfigError);
  CHECK_THROWS_AS(init_autoencoder({5}, rng), ConfigError);
  CHECK_THROWS_AS(init_autoencoder({5, 3, 5}, {Activation::relu}, rng), ConfigError);
  const AEParams p = init_autoencoder({6, 8, 2, 8, 6}, rng);
  CHECK(p.layers.size() == 4);
  CHECK(p.layers.back().activation == Activation::identity);
  CHECK(p.layers.front().activation == Activation::relu);
  const double limit = std::sqrt(6.0 / 14.0);
  CHECK(p.layers[0].weight.cwiseAbs().maxCoeff() <= limit);
  CHECK(p.layers[0].bias.isZero());
  for (auto a : {Activation::relu, Activation::tanh, Activation::identity}) {
    CHECK(parse_activation(to_string(a)) == a);
  }
}

TEST_CASE("backward examples") {
  RngStream rng(42, 0);
  const AEParams net = init_autoencoder({6, 5, 3, 5, 6}, rng);
  const Vector x = random_vec(rng, 6);
  const auto f = forward(net, x);
  CHECK(backward(net, f.cache, Vector(Vector::Zero(6))).all_zero());

  // One linear layer with MSE: dL/dW = 2 (Wx + b - x) x^T.
  AEParams lin = init_autoencoder({4, 4}, {Activation::identity}, rng);
  lin.layers[0].bias = random_vec(rng, 4);
  const Vector x4 = random_vec(rng, 4);
  const auto fl = forward(lin, x4);
  const auto loss = mse_loss(x4, fl.reconstruction);
  const auto g = backward(lin, fl.cache, loss.grad);
  const Vector r = lin.layers[0].weight * x4 + lin.layers[0].bias - x4;
  const Matrix expected = 2.0 * r * x4.transpose();
  CHECK((g.weight[0] - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g.bias[0] - 2.0 * r).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("stale caches are rejected") {
  RngStream rng(43, 0);
  AEParams net = init_autoencoder({4, 3, 4}, rng);
  const auto f = forward(net, Vector(random_vec(rng, 4)));
  OptimizerState opt(OptimizerConfig{}, net);
  opt.step(net, Gradients::zeros_like(net));
  CHECK_THROWS_AS(backward(net, f.cache, Vector(Vector::Ones(4))), StaleCacheError);
  const AEParams other = net;
  const auto g = forward(net, Vector(random_vec(rng, 4)));
  CHECK_THROWS_AS(backward(other, g.cache, Vector(Vector::Ones(4))), StaleCacheError);
}

TEST_CASE("backprop matches finite differences for every loss") {
  const std::vector<LossKind> kinds{LossKind::mse, LossKind::cs, LossKind::n2v, LossKind::dcs,
                                    LossKind::dcs_approx};
  for (auto kind : kinds) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      INFO("loss " << to_string(kind) << " seed " << seed);
      CHECK(dcs::testing::network_gradient_error(kind, seed) <= 1e-3);
    }
  }
}

TEST_CASE("backprop through relu layers") {
  // A 1e-5 step straddles a kink with negligible probability for these draws.
  for (auto kind : {LossKind::mse, LossKind::dcs}) {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      INFO("loss " << to_string(kind) << " seed " << seed);
      CHECK(dcs::testing::network_gradient_error(kind, seed, Activation::relu) <= 1e-3);
    }
  }
}

TEST_CASE("optimizer steps") {
  RngStream rng(45, 0);
  AEParams net = init_autoencoder({5, 4, 5}, rng);
  const AEParams before = net;
  OptimizerState adam(OptimizerConfig{}, net);
  for (int i = 0; i < 3; ++i) adam.step(net, Gradients::zeros_like(net));
  CHECK(flatten(net) == flatten(before));
  CHECK(adam.step_count() == 3);
  CHECK(adam.first_moment().all_zero());
  CHECK(adam.second_moment().all_zero());

  // The first bias-corrected Adam step moves each parameter by about lr.
  Gradients g = Gradients::zeros_like(net);
  for (auto& w : g.weight) w.setConstant(-3.0);
  AEParams fresh = before;
  OptimizerState first(OptimizerConfig{}, fresh);
  first.step(fresh, g);
  CHECK((fresh.layers[0].weight - before.layers[0].weight).cwiseAbs().minCoeff() ==
        doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(fresh.layers[0].bias == before.layers[0].bias);

  AEParams sgd_net = before;
  OptimizerConfig sgd;
  sgd.kind = OptimizerKind::sgd;
  sgd.learning_rate = 0.5;
  OptimizerState s(sgd, sgd_net);
  s.step(sgd_net, g);
  CHECK(sgd_net.layers[0].weight(0, 0) == doctest::Approx(before.layers[0].weight(0, 0) + 1.5));
  CHECK(parse_optimizer_kind("adam") == OptimizerKind::adam);
  CHECK_THROWS_AS(parse_optimizer_kind("rmsprop"), ConfigError);
}

TEST_CASE("training contracts") {
  RngStream rng(46, 0);
  const auto data = random_dataset(rng, 32, 8);
  const AEParams init = init_autoencoder({8, 16, 4, 16, 8}, rng);
  LossConfig mse;
  mse.kind = LossKind::mse;
  TrainConfig cfg;
  cfg.batch_size = 8;

  SUBCASE("zero epochs") {
    cfg.epochs = 0;
    const auto r = train(init, data, mse, cfg, RngStream(1, 0));
    CHECK(flatten(r.params) == flatten(init));
    CHECK(r.log.empty());
  }
  SUBCASE("mse toy run improves") {
    cfg.epochs = 200;
    const auto r = train(init, data, mse, cfg, RngStream(1, 0));
    REQUIRE(r.log.size() == 200);
    CHECK(r.log.back().mean_loss < r.log.front().mean_loss);
    double initial = 0.0, final_loss = 0.0;
    for (const auto& s : data) {
      initial += mse_loss(s.values(), forward(init, s).reconstruction).value;
      final_loss += mse_loss(s.values(), forward(r.params, s).reconstruction).value;
    }
    CHECK(final_loss < initial);
  }
  SUBCASE("deterministic log for every loss") {
    cfg.epochs = 3;
    for (auto kind : {LossKind::mse, LossKind::cs, LossKind::n2v, LossKind::dcs, LossKind::dcs_approx}) {
      LossConfig lc;
      lc.kind = kind;
      lc.grid = GridShape::image(2, 4);
      lc.rho = 0.3;
      const auto a = train(init, data, lc, cfg, RngStream(5, 1));
      const auto b = train(init, data, lc, cfg, RngStream(5, 1));
      REQUIRE(a.log.size() == b.log.size());
      for (std::size_t e = 0; e < a.log.size(); ++e) CHECK(a.log[e].mean_loss == b.log[e].mean_loss);
      CHECK(flatten(a.params) == flatten(b.params));
    }
  }
  SUBCASE("full batch is order invariant") {
    // Draws are keyed by sample index, so shuffling only reorders sums.
    cfg.epochs = 5;
    cfg.batch_size = data.size();
    LossConfig lc;
    lc.kind = LossKind::dcs;
    lc.grid = GridShape::image(2, 4);
    lc.rho = 0.3;
    const auto shuffled = train(init, data, lc, cfg, RngStream(6, 0));
    cfg.shuffle = false;
    const auto ordered = train(init, data, lc, cfg, RngStream(6, 0));
    for (std::size_t e = 0; e < 5; ++e) {
      CHECK(shuffled.log[e].mean_loss == doctest::Approx(ordered.log[e].mean_loss).epsilon(1e-10));
    }
  }
  SUBCASE("divergence is reported") {
    cfg.epochs = 50;
    cfg.optimizer.kind = OptimizerKind::sgd;
    cfg.optimizer.learning_rate = 1e150;
    try {
      train(init, data, mse, cfg, RngStream(1, 0));
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.last_good_epoch() >= 0);
      CHECK(e.last_good_epoch() < 50);
    }
  }
  SUBCASE("bad inputs") {
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(init, data, mse, cfg, RngStream(1, 0)), ConfigError);
    cfg.batch_size = 4;
    CHECK_THROWS_AS(train(init, std::span<const SignalVec>(), mse, cfg, RngStream(1, 0)), ConfigError);
  }
}

TEST_CASE("linear probe") {
  RngStream rng(47, 0);
  SUBCASE("separable blobs") {
    Matrix xtr, xte;
    std::vector<int> ytr, yte;
    blobs(rng, 400, 5, 2, 12.0, xtr, ytr);
    blobs(rng, 200, 5, 2, 12.0, xte, yte);
    CHECK(linear_probe(xtr, ytr, xte, yte) >= 99.0);
  }
  SUBCASE("shuffled labels sit at chance") {
    Matrix xtr, xte;
    std::vector<int> ytr, yte;
    blobs(rng, 2000, 6, 4, 0.0, xtr, ytr);
    blobs(rng, 2000, 6, 4, 0.0, xte, yte);
    const double acc = linear_probe(xtr, ytr, xte, yte);
    CHECK(acc >= 20.0);
    CHECK(acc <= 30.0);
  }
  SUBCASE("training fit bounds held-out accuracy") {
    Matrix xtr, xte;
    std::vector<int> ytr, yte;
    blobs(rng, 300, 6, 3, 1.5, xtr, ytr);
    blobs(rng, 300, 6, 3, 1.5, xte, yte);
    CHECK(linear_probe(xtr, ytr, xtr, ytr) >= linear_probe(xtr, ytr, xte, yte));
  }
  SUBCASE("single class is rejected") {
    Matrix x = Matrix::Ones(4, 2);
    CHECK_THROWS_AS(linear_probe(x, {1, 1, 1, 1}, x, {1, 1, 1, 1}), ConfigError);
  }
}

TEST_CASE("checkpoint round-trip") {
  RngStream rng(48, 0);
  AEParams net = init_autoencoder({6, 5, 2, 5, 6}, rng);
  for (auto& l : net.layers) l.bias = random_vec(rng, std::size_t(l.bias.size()));
  const AEParams back = checkpoint_from_json(checkpoint_to_json(net));
  CHECK(back.layer_dims == net.layer_dims);
  CHECK(back.code_layer == net.code_layer);
  CHECK(flatten(back) == flatten(net));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(back.layers[i].activation == net.layers[i].activation);
  }

  const std::string path = "test_model_checkpoint.json";
  save_checkpoint(net, path);
  CHECK(flatten(load_checkpoint(path)) == flatten(net));
  std::remove(path.c_str());
  CHECK_THROWS_AS(checkpoint_from_json("{\"format\": 99}"), ConfigError);
  CHECK_THROWS_AS(checkpoint_from_json("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(checkpoint_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(load_checkpoint("does/not/exist.json"), ConfigError);
}
