#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rangecd/model.hpp"

using namespace rangecd;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.height = 8;
  cfg.width = 16;
  cfg.encoder_channels = {4, 6, 8, 10};
  return cfg;
}

Tensor random_input(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor input(2, cfg.height, cfg.width);
  for (double& v : input.data) v = u(rng);
  return input;
}

// Scalar objective used for gradient checking: sum of w_k * p_changed_k.
double probe_loss(const ChangeModel& model, const Tensor& input,
                  const std::vector<double>& pixel_weights) {
  const PixelLogits logits = model.forward(input);
  const std::vector<double> p = changed_probabilities(logits);
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += pixel_weights[k] * p[k];
  return acc;
}

}  // namespace

TEST_CASE("all-zero parameters give uniform 0.5 probabilities") {
  ChangeModel model(tiny_config(), 1);
  for (auto& ref : model.parameters()) {
    for (std::size_t k = 0; k < ref.count; ++k) ref.values[k] = 0.0;
  }
  const PixelLogits logits = model.forward(random_input(tiny_config(), 2));
  for (double p : changed_probabilities(logits)) CHECK(p == doctest::Approx(0.5));
}

TEST_CASE("forward is deterministic for fixed seed and inputs") {
  const Tensor input = random_input(tiny_config(), 3);
  ChangeModel a(tiny_config(), 42);
  ChangeModel b(tiny_config(), 42);
  const PixelLogits la = a.forward(input);
  const PixelLogits lb = b.forward(input);
  REQUIRE(la.data.size() == lb.data.size());
  for (std::size_t k = 0; k < la.data.size(); ++k) CHECK(la.data[k] == lb.data[k]);
}

TEST_CASE("shape mismatch is rejected") {
  ChangeModel model(tiny_config(), 1);
  CHECK_THROWS_AS(model.forward(Tensor(2, 8, 24)), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(Tensor(3, 8, 16)), std::invalid_argument);
}

TEST_CASE("perturbing one pixel only changes outputs in its receptive field") {
  ModelConfig cfg = tiny_config();
  cfg.width = 256;  // wide enough that the receptive field does not cover everything
  ChangeModel model(cfg, 7);
  Tensor base = random_input(cfg, 8);
  // live == map
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) base.at(1, y, x) = base.at(0, y, x);
  }
  const PixelLogits before = model.forward(base);

  Tensor perturbed = base;
  perturbed.at(0, 4, 128) += 0.5;
  const PixelLogits after = model.forward(perturbed);

  // Horizontal reach: summing the per-layer kernel extents scaled by their
  // strides (three pools deep) bounds the receptive field radius near 51
  // columns; 64 leaves margin.
  const int reach = 64;
  bool any_changed = false;
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const int dx = std::min(std::abs(x - 128), cfg.width - std::abs(x - 128));
      const double delta = std::abs(after.at(1, y, x) - before.at(1, y, x)) +
                           std::abs(after.at(0, y, x) - before.at(0, y, x));
      if (delta > 0.0) any_changed = true;
      if (dx > reach) CHECK(delta == 0.0);
    }
  }
  CHECK(any_changed);
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  ChangeModel model(tiny_config(), 5);
  model.forward_training(random_input(tiny_config(), 6));
  model.backward(std::vector<double>(8 * 16, 0.0));
  for (auto& ref : model.parameters()) {
    for (std::size_t k = 0; k < ref.count; ++k) CHECK(ref.grads[k] == 0.0);
  }
}

TEST_CASE("backward without forward state throws") {
  ChangeModel model(tiny_config(), 5);
  CHECK_THROWS(model.backward(std::vector<double>(8 * 16, 0.0)));
}

TEST_CASE("parameter gradients match central finite differences on 8x16") {
  const ModelConfig cfg = tiny_config();
  ChangeModel model(cfg, 11);
  const Tensor input = random_input(cfg, 12);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> pixel_weights(static_cast<std::size_t>(cfg.height) * cfg.width);
  for (double& w : pixel_weights) w = u(rng);

  model.zero_gradients();
  model.forward_training(input);
  model.backward(pixel_weights);

  const double h = 1e-4;
  std::size_t checked = 0, kinks = 0;
  auto central_fd = [&](double* value, double step) {
    const double saved = *value;
    *value = saved + step;
    const double fplus = probe_loss(model, input, pixel_weights);
    *value = saved - step;
    const double fminus = probe_loss(model, input, pixel_weights);
    *value = saved;
    return (fplus - fminus) / (2 * step);
  };
  for (auto& ref : model.parameters()) {
    for (std::size_t k = 0; k < ref.count; ++k) {
      const double fd = central_fd(&ref.values[k], h);
      const double analytic = ref.grads[k];
      if (std::abs(fd) < 1e-12 && std::abs(analytic) < 1e-12) {
        continue;  // exactly-zero path (inactive unit at this input)
      }
      // The objective is piecewise smooth; a perturbation that crosses a
      // ReLU or pooling kink makes the two step sizes disagree. Skip those.
      const double fd_half = central_fd(&ref.values[k], h / 2);
      if (std::abs(fd - fd_half) > 1e-4 * std::max({std::abs(fd), std::abs(fd_half), 1e-6})) {
        ++kinks;
        continue;
      }
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
      CHECK(std::abs(analytic - fd) / denom <= 1e-3);
      ++checked;
    }
  }
  CHECK(checked > 1000);
  CHECK(kinks < 50);
}

TEST_CASE("sentinel (zero-range) pixels participate in gradients") {
  const ModelConfig cfg = tiny_config();
  ChangeModel model(cfg, 21);
  Tensor input = random_input(cfg, 22);
  input.at(0, 3, 5) = 0.0;  // empty live pixel
  input.at(1, 3, 5) = 0.0;  // empty map pixel
  model.zero_gradients();
  model.forward_training(input);
  std::vector<double> g(static_cast<std::size_t>(cfg.height) * cfg.width, 0.0);
  g[3 * cfg.width + 5] = 1.0;
  model.backward(g);
  double grad_norm = 0.0;
  for (auto& ref : model.parameters()) {
    for (std::size_t k = 0; k < ref.count; ++k) grad_norm += std::abs(ref.grads[k]);
  }
  CHECK(grad_norm > 0.0);
}

TEST_CASE("predict_labels tie rule and strong logits") {
  PixelLogits logits(2, 1, 2);
  logits.at(0, 0, 0) = 0.0;
  logits.at(1, 0, 0) = 0.0;  // tie -> Consistent
  logits.at(0, 0, 1) = -5.0;
  logits.at(1, 0, 1) = 5.0;  // clearly Changed
  const auto labels = predict_labels(logits);
  CHECK(labels[0] == Label::Consistent);
  CHECK(labels[1] == Label::Changed);
}

TEST_CASE("predicted labels match a scalar softmax oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  PixelLogits logits(2, 4, 8);
  for (double& v : logits.data) v = u(rng);
  const auto labels = predict_labels(logits, 0.5);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double z0 = logits.at(0, y, x), z1 = logits.at(1, y, x);
      const double p1 = std::exp(z1) / (std::exp(z0) + std::exp(z1));
      CHECK(labels[static_cast<std::size_t>(y) * 8 + x] ==
            (p1 > 0.5 ? Label::Changed : Label::Consistent));
    }
  }
}

TEST_CASE("circular azimuthal shift equivariance at stride multiples") {
  const ModelConfig cfg = tiny_config();
  ChangeModel model(cfg, 41);
  const Tensor input = random_input(cfg, 42);
  const int shift = 8;  // multiple of the total pooling stride

  Tensor shifted(2, cfg.height, cfg.width);
  for (int c = 0; c < 2; ++c) {
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        shifted.at(c, y, (x + shift) % cfg.width) = input.at(c, y, x);
      }
    }
  }
  const PixelLogits base = model.forward(input);
  const PixelLogits moved = model.forward(shifted);
  for (int c = 0; c < 2; ++c) {
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        CHECK(moved.at(c, y, (x + shift) % cfg.width) ==
              doctest::Approx(base.at(c, y, x)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("parameter count is a pure function of the configuration") {
  CHECK(parameter_count(tiny_config()) == ChangeModel(tiny_config(), 0).parameter_count());
  ModelConfig deployed;
  deployed.height = 64;
  deployed.width = 1024;
  // Frozen regression value for the default [16,32,64,128] configuration.
  CHECK(parameter_count(deployed) == 486978);
}

TEST_CASE("checkpoint save/load round trip preserves outputs") {
  const ModelConfig cfg = tiny_config();
  ChangeModel model(cfg, 51);
  const Tensor input = random_input(cfg, 52);
  const PixelLogits before = model.forward(input);

  const auto path = std::filesystem::temp_directory_path() / "rangecd_test_ckpt.bin";
  model.save(path);
  const ChangeModel loaded = ChangeModel::load(path);
  CHECK(loaded.config() == cfg);
  const PixelLogits after = loaded.forward(input);
  for (std::size_t k = 0; k < before.data.size(); ++k) CHECK(after.data[k] == before.data[k]);
  std::filesystem::remove(path);
}

TEST_CASE("invalid configurations are rejected") {
  ModelConfig bad;
  bad.height = 12;  // not a multiple of 8
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ModelConfig{};
  bad.num_classes = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
