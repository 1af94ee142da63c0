#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "dcs/error.hpp"
#include "dcs/experiment.hpp"
#include "dcs/losses.hpp"
#include "dcs/masking.hpp"
#include "dcs/verify.hpp"
#include "dcs/weights.hpp"

namespace py = pybind11;
using namespace dcs;

namespace {

MaskVec to_mask(const std::vector<int>& bits, double rho) {
  std::vector<std::uint8_t> b;
  b.reserve(bits.size());
  for (int v : bits) {
    if (v != 0 && v != 1) throw ConfigError("mask entries must be 0 or 1");
    b.push_back(static_cast<std::uint8_t>(v));
  }
  return MaskVec(std::move(b), rho);
}

MaskedPair to_pair(const Vector& x, const Vector& x_tilde, const std::vector<int>& mask) {
  // rho is not used by the losses; 0.5 is a placeholder.
  return MaskedPair(SignalVec(x), SignalVec(x_tilde), to_mask(mask, 0.5));
}

py::tuple loss_tuple(const LossValue& v) { return py::make_tuple(v.value, v.grad); }

std::vector<int> mask_bits(const MaskVec& m) { return {m.bits().begin(), m.bits().end()}; }

}  // namespace

PYBIND11_MODULE(_dcs, m) {
  m.doc() = "Denoising cosine-similarity loss core";

  py::register_exception<Error>(m, "DcsError", PyExc_ValueError);

  m.def(
      "estimate_c",
      [](const Vector& x, const Vector& x_tilde, std::optional<std::vector<int>> mask) {
        if (!mask) return estimate_c(x, x_tilde);
        return estimate_c(to_pair(x, x_tilde, *mask));
      },
      py::arg("x"), py::arg("x_tilde"), py::arg("mask") = py::none());

  m.def(
      "estimate_k",
      [](double c_hat, std::size_t dim, std::size_t n_samples, std::uint64_t seed) {
        RngStream rng(seed, fnv1a64("estimate"));
        const auto w = estimate_k_mc(rng, c_hat, dim, n_samples);
        py::dict d;
        d["c_hat"] = w.c_hat;
        d["k_hat"] = w.k_hat;
        d["std_error"] = w.std_error;
        d["n_samples"] = w.n_samples;
        return d;
      },
      py::arg("c_hat"), py::arg("dim"), py::arg("n_samples") = kDefaultWeightSamples,
      py::arg("seed") = 0);

  m.def("k_closed_form", &k_closed_form, py::arg("c"));
  m.def("dcs_approx_weight", &dcs_approx_weight, py::arg("c_hat"), py::arg("eta") = kDefaultEta);
  m.def("theorem2_bound", &theorem2_bound, py::arg("c"), py::arg("sigma_bar_sq"), py::arg("sigma_sq"),
        py::arg("delta"), py::arg("dim"));

  m.def(
      "cs_loss", [](const Vector& u, const Vector& v, double eta) { return loss_tuple(cs_loss(u, v, eta)); },
      py::arg("u"), py::arg("v"), py::arg("eta") = kDefaultEta);
  m.def(
      "mse_loss", [](const Vector& x, const Vector& s_hat) { return loss_tuple(mse_loss(x, s_hat)); },
      py::arg("x"), py::arg("s_hat"));
  m.def(
      "n2v_loss",
      [](const Vector& x, const Vector& x_tilde, const std::vector<int>& mask, const Vector& s_hat) {
        return loss_tuple(n2v_loss(to_pair(x, x_tilde, mask), s_hat));
      },
      py::arg("x"), py::arg("x_tilde"), py::arg("mask"), py::arg("s_hat"));
  m.def(
      "dcs_loss",
      [](const Vector& x, const Vector& x_tilde, const std::vector<int>& mask, const Vector& s_hat,
         double k_hat, double eta) {
        return loss_tuple(dcs_loss(to_pair(x, x_tilde, mask), s_hat, k_hat, eta));
      },
      py::arg("x"), py::arg("x_tilde"), py::arg("mask"), py::arg("s_hat"), py::arg("k_hat"),
      py::arg("eta") = kDefaultEta);
  m.def(
      "dcs_loss_approx",
      [](const Vector& x, const Vector& x_tilde, const std::vector<int>& mask, const Vector& s_hat,
         double eta) { return loss_tuple(dcs_loss_approx(to_pair(x, x_tilde, mask), s_hat, eta)); },
      py::arg("x"), py::arg("x_tilde"), py::arg("mask"), py::arg("s_hat"), py::arg("eta") = kDefaultEta);

  m.def(
      "blind_spot_mask",
      [](const Vector& x, std::size_t height, std::size_t width, double rho, int radius, std::uint64_t seed) {
        RngStream rng(seed, fnv1a64("mask"));
        const auto p = blind_spot_mask(rng, SignalVec(x), GridShape::image(height, width), rho, radius);
        return py::make_tuple(p.x_tilde.values(), mask_bits(p.mask));
      },
      py::arg("x"), py::arg("height"), py::arg("width"), py::arg("rho"), py::arg("radius") = 1,
      py::arg("seed") = 0);
  m.def(
      "tau_amn_mask",
      [](const Vector& x, double rho, int delta, std::uint64_t seed) {
        RngStream rng(seed, fnv1a64("mask"));
        const auto p = tau_amn_mask(rng, SignalVec(x), rho, delta);
        return py::make_tuple(p.x_tilde.values(), mask_bits(p.mask));
      },
      py::arg("x"), py::arg("rho"), py::arg("delta"), py::arg("seed") = 0);

  m.def("check_ids", &check_ids);
  m.def(
      "verify_json",
      [](const std::string& check, std::uint64_t seed) {
        py::gil_scoped_release release;
        return nlohmann::json(run_checks(check, seed)).dump();
      },
      py::arg("check") = "all", py::arg("seed") = 0);

  m.def(
      "run_experiment_csv",
      [](const std::string& config_text) {
        const ExperimentConfig config = parse_experiment_config(config_text);
        py::gil_scoped_release release;
        return format_results_csv(run_experiment(config).rows, config);
      },
      py::arg("config_text"));
}
