#include "rangecd/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace rangecd {

void ModelConfig::validate() const {
  const int factor = 8;  // 2^(stages-1)
  if (height < factor || width < factor || height % factor != 0 || width % factor != 0) {
    throw std::invalid_argument("H and W must be positive multiples of 8");
  }
  for (int c : encoder_channels) {
    if (c < 1) throw std::invalid_argument("encoder channels must be >= 1");
  }
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
}

namespace {

struct LayerSpec {
  std::string name;
  int in_c, out_c, kh, kw;
  bool relu;
};

std::vector<LayerSpec> layer_specs(const ModelConfig& cfg) {
  const auto [c1, c2, c3, c4] = cfg.encoder_channels;
  return {
      {"enc1a", 2, c1, 1, 2, true},       {"enc1b", c1, c1, 3, 3, true},
      {"enc2a", c1, c2, 3, 3, true},      {"enc2b", c2, c2, 3, 3, true},
      {"enc3a", c2, c3, 3, 3, true},      {"enc3b", c3, c3, 3, 3, true},
      {"enc4a", c3, c4, 3, 3, true},      {"enc4b", c4, c4, 3, 3, true},
      {"dec3a", c4 + c3, c3, 3, 3, true}, {"dec3b", c3, c3, 3, 3, true},
      {"dec2a", c3 + c2, c2, 3, 3, true}, {"dec2b", c2, c2, 3, 3, true},
      {"dec1a", c2 + c1, c1, 3, 3, true}, {"dec1b", c1, c1, 3, 3, true},
      {"head", c1, cfg.num_classes, 1, 2, false},
  };
}

struct ConvLayer {
  LayerSpec spec;
  Kernel weight;
  std::vector<double> bias;
  Kernel weight_grad;
  std::vector<double> bias_grad;
};

}  // namespace

std::size_t parameter_count(const ModelConfig& cfg) {
  cfg.validate();
  std::size_t total = 0;
  for (const auto& s : layer_specs(cfg)) {
    total += static_cast<std::size_t>(s.out_c) * s.in_c * s.kh * s.kw + s.out_c;
  }
  return total;
}

std::vector<double> changed_probabilities(const PixelLogits& logits) {
  const std::size_t hw = static_cast<std::size_t>(logits.h) * logits.w;
  std::vector<double> p(hw);
  for (std::size_t k = 0; k < hw; ++k) {
    const double z0 = logits.data[k];
    const double z1 = logits.data[hw + k];
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    p[k] = e1 / (e0 + e1);
  }
  return p;
}

std::vector<Label> predict_labels(const PixelLogits& logits, double threshold) {
  const std::vector<double> p = changed_probabilities(logits);
  std::vector<Label> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    out[k] = p[k] > threshold ? Label::Changed : Label::Consistent;
  }
  return out;
}

struct ChangeModel::Impl {
  ModelConfig cfg;
  std::vector<ConvLayer> layers;

  // Retained activations from forward_training().
  struct Tape {
    Tensor input;
    Tensor a1a, a1b, p1;
    Tensor a2a, a2b, p2;
    Tensor a3a, a3b, p3;
    Tensor a4a, a4b;
    Tensor u3, cat3, d3a, d3b;
    Tensor u2, cat2, d2a, d2b;
    Tensor u1, cat1, d1a, d1b;
    Tensor logits;
    std::vector<std::uint32_t> argmax1, argmax2, argmax3;
    bool valid = false;
  };
  Tape tape;

  Impl(const ModelConfig& c, std::uint64_t seed) : cfg(c) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    for (const auto& spec : layer_specs(cfg)) {
      ConvLayer layer;
      layer.spec = spec;
      layer.weight = Kernel(spec.out_c, spec.in_c, spec.kh, spec.kw);
      layer.bias.assign(spec.out_c, 0.0);
      const double limit = std::sqrt(1.0 / (spec.in_c * spec.kh * spec.kw));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& v : layer.weight.data) v = dist(rng);
      for (double& v : layer.bias) v = dist(rng);
      layer.weight_grad = Kernel(spec.out_c, spec.in_c, spec.kh, spec.kw);
      layer.bias_grad.assign(spec.out_c, 0.0);
      layers.push_back(std::move(layer));
    }
  }

  Tensor conv(int idx, const Tensor& in, bool relu) const {
    Tensor out = conv2d_forward(in, layers[idx].weight, layers[idx].bias);
    if (relu) relu_forward(out);
    return out;
  }

  // Backward through one conv (+ its ReLU); accumulates parameter gradients.
  Tensor conv_back(int idx, const Tensor& in, const Tensor& activated_out, Tensor grad,
                   bool relu) {
    if (relu) relu_backward(activated_out, grad);
    Kernel dk;
    std::vector<double> db;
    Tensor din;
    conv2d_backward(in, layers[idx].weight, grad, dk, db, din);
    ConvLayer& layer = layers[idx];
    for (std::size_t k = 0; k < dk.data.size(); ++k) layer.weight_grad.data[k] += dk.data[k];
    for (std::size_t k = 0; k < db.size(); ++k) layer.bias_grad[k] += db[k];
    return din;
  }

  PixelLogits run_forward(const Tensor& input, bool record) {
    if (input.c != 2 || input.h != cfg.height || input.w != cfg.width) {
      throw std::invalid_argument("model input shape mismatch");
    }
    Tape t;
    t.input = input;
    t.a1a = conv(0, t.input, true);
    t.a1b = conv(1, t.a1a, true);
    t.p1 = maxpool2_forward(t.a1b, t.argmax1);
    t.a2a = conv(2, t.p1, true);
    t.a2b = conv(3, t.a2a, true);
    t.p2 = maxpool2_forward(t.a2b, t.argmax2);
    t.a3a = conv(4, t.p2, true);
    t.a3b = conv(5, t.a3a, true);
    t.p3 = maxpool2_forward(t.a3b, t.argmax3);
    t.a4a = conv(6, t.p3, true);
    t.a4b = conv(7, t.a4a, true);

    t.u3 = upsample2_forward(t.a4b);
    t.cat3 = concat_channels(t.u3, t.a3b);
    t.d3a = conv(8, t.cat3, true);
    t.d3b = conv(9, t.d3a, true);
    t.u2 = upsample2_forward(t.d3b);
    t.cat2 = concat_channels(t.u2, t.a2b);
    t.d2a = conv(10, t.cat2, true);
    t.d2b = conv(11, t.d2a, true);
    t.u1 = upsample2_forward(t.d2b);
    t.cat1 = concat_channels(t.u1, t.a1b);
    t.d1a = conv(12, t.cat1, true);
    t.d1b = conv(13, t.d1a, true);
    t.logits = conv(14, t.d1b, false);

    PixelLogits out = t.logits;
    if (record) {
      t.valid = true;
      tape = std::move(t);
    }
    return out;
  }

  void run_backward(const std::vector<double>& dloss_dp) {
    if (!tape.valid) throw std::runtime_error("backward() without retained forward state");
    const Tape& t = tape;
    const std::size_t hw = static_cast<std::size_t>(cfg.height) * cfg.width;
    if (dloss_dp.size() != hw) throw std::invalid_argument("upstream gradient size mismatch");

    // Softmax chain: p1 = softmax(z)_1, dz1 = g*p1*p0, dz0 = -g*p1*p0.
    const std::vector<double> p = changed_probabilities(t.logits);
    Tensor g_logits(cfg.num_classes, cfg.height, cfg.width);
    for (std::size_t k = 0; k < hw; ++k) {
      const double s = dloss_dp[k] * p[k] * (1.0 - p[k]);
      g_logits.data[k] = -s;
      g_logits.data[hw + k] = s;
    }

    Tensor g = conv_back(14, t.d1b, t.logits, std::move(g_logits), false);
    g = conv_back(13, t.d1a, t.d1b, std::move(g), true);
    g = conv_back(12, t.cat1, t.d1a, std::move(g), true);
    Tensor g_u1(t.u1.c, t.u1.h, t.u1.w), g_skip1(t.a1b.c, t.a1b.h, t.a1b.w);
    split_channels(g, g_u1, g_skip1);

    g = upsample2_backward(g_u1, t.d2b.h, t.d2b.w);
    g = conv_back(11, t.d2a, t.d2b, std::move(g), true);
    g = conv_back(10, t.cat2, t.d2a, std::move(g), true);
    Tensor g_u2(t.u2.c, t.u2.h, t.u2.w), g_skip2(t.a2b.c, t.a2b.h, t.a2b.w);
    split_channels(g, g_u2, g_skip2);

    g = upsample2_backward(g_u2, t.d3b.h, t.d3b.w);
    g = conv_back(9, t.d3a, t.d3b, std::move(g), true);
    g = conv_back(8, t.cat3, t.d3a, std::move(g), true);
    Tensor g_u3(t.u3.c, t.u3.h, t.u3.w), g_skip3(t.a3b.c, t.a3b.h, t.a3b.w);
    split_channels(g, g_u3, g_skip3);

    g = upsample2_backward(g_u3, t.a4b.h, t.a4b.w);
    g = conv_back(7, t.a4a, t.a4b, std::move(g), true);
    g = conv_back(6, t.p3, t.a4a, std::move(g), true);
    g = maxpool2_backward(g, t.argmax3, t.a3b.h, t.a3b.w);
    for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += g_skip3.data[k];

    g = conv_back(5, t.a3a, t.a3b, std::move(g), true);
    g = conv_back(4, t.p2, t.a3a, std::move(g), true);
    g = maxpool2_backward(g, t.argmax2, t.a2b.h, t.a2b.w);
    for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += g_skip2.data[k];

    g = conv_back(3, t.a2a, t.a2b, std::move(g), true);
    g = conv_back(2, t.p1, t.a2a, std::move(g), true);
    g = maxpool2_backward(g, t.argmax1, t.a1b.h, t.a1b.w);
    for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += g_skip1.data[k];

    g = conv_back(1, t.a1a, t.a1b, std::move(g), true);
    conv_back(0, t.input, t.a1a, std::move(g), true);
  }
};

ChangeModel::ChangeModel(const ModelConfig& cfg, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(cfg, seed)) {}
ChangeModel::~ChangeModel() = default;
ChangeModel::ChangeModel(ChangeModel&&) noexcept = default;
ChangeModel& ChangeModel::operator=(ChangeModel&&) noexcept = default;

const ModelConfig& ChangeModel::config() const { return impl_->cfg; }

ChangeModel ChangeModel::clone() const {
  ChangeModel copy(impl_->cfg);
  for (std::size_t i = 0; i < impl_->layers.size(); ++i) {
    copy.impl_->layers[i].weight = impl_->layers[i].weight;
    copy.impl_->layers[i].bias = impl_->layers[i].bias;
  }
  return copy;
}

Tensor ChangeModel::stack_inputs(const RangeImage& live, const RangeImage& map,
                                 double max_range) {
  if (live.height != map.height || live.width != map.width) {
    throw std::invalid_argument("live and map range images must share dimensions");
  }
  Tensor input(2, live.height, live.width);
  const std::size_t hw = live.ranges.size();
  for (std::size_t k = 0; k < hw; ++k) {
    input.data[k] = live.ranges[k] / max_range;
    input.data[hw + k] = map.ranges[k] / max_range;
  }
  return input;
}

PixelLogits ChangeModel::forward(const Tensor& input) const {
  return impl_->run_forward(input, /*record=*/false);
}

PixelLogits ChangeModel::forward(const RangeImage& live, const RangeImage& map) const {
  return forward(stack_inputs(live, map, live.config.max_range));
}

PixelLogits ChangeModel::forward_training(const Tensor& input) {
  return impl_->run_forward(input, /*record=*/true);
}

void ChangeModel::backward(const std::vector<double>& dloss_dpchanged) {
  impl_->run_backward(dloss_dpchanged);
}

std::vector<ChangeModel::ParamRef> ChangeModel::parameters() {
  std::vector<ParamRef> refs;
  for (auto& layer : impl_->layers) {
    refs.push_back({layer.spec.name + ".weight", layer.weight.data.data(),
                    layer.weight_grad.data.data(), layer.weight.data.size()});
    refs.push_back({layer.spec.name + ".bias", layer.bias.data(), layer.bias_grad.data(),
                    layer.bias.size()});
  }
  return refs;
}

void ChangeModel::zero_gradients() {
  for (auto& layer : impl_->layers) {
    layer.weight_grad.zero();
    layer.bias_grad.assign(layer.bias_grad.size(), 0.0);
  }
}

std::size_t ChangeModel::parameter_count() const { return rangecd::parameter_count(impl_->cfg); }

namespace {

// Checkpoint container, little-endian throughout.
constexpr char kMagic[4] = {'R', 'C', 'D', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
               static_cast<char>(v >> 24)};
  out.write(b, 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(bits >> (8 * i));
  out.write(b, 8);
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void ChangeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  const ModelConfig& cfg = impl_->cfg;
  write_u32(out, static_cast<std::uint32_t>(cfg.height));
  write_u32(out, static_cast<std::uint32_t>(cfg.width));
  for (int c : cfg.encoder_channels) write_u32(out, static_cast<std::uint32_t>(c));
  write_u32(out, static_cast<std::uint32_t>(cfg.num_classes));

  write_u32(out, static_cast<std::uint32_t>(impl_->layers.size() * 2));
  auto write_tensor = [&](const std::string& name, const std::vector<std::uint32_t>& dims,
                          const std::vector<double>& values) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (std::uint32_t d : dims) write_u32(out, d);
    for (double v : values) write_f64(out, v);
  };
  for (const auto& layer : impl_->layers) {
    const Kernel& k = layer.weight;
    write_tensor(layer.spec.name + ".weight",
                 {static_cast<std::uint32_t>(k.oc), static_cast<std::uint32_t>(k.ic),
                  static_cast<std::uint32_t>(k.kh), static_cast<std::uint32_t>(k.kw)},
                 k.data);
    write_tensor(layer.spec.name + ".bias", {static_cast<std::uint32_t>(layer.bias.size())},
                 layer.bias);
  }
}

ChangeModel ChangeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a model checkpoint");
  if (read_u32(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");

  ModelConfig cfg;
  cfg.height = static_cast<int>(read_u32(in));
  cfg.width = static_cast<int>(read_u32(in));
  for (int& c : cfg.encoder_channels) c = static_cast<int>(read_u32(in));
  cfg.num_classes = static_cast<int>(read_u32(in));

  ChangeModel model(cfg);
  const std::uint32_t n_tensors = read_u32(in);
  auto params = model.parameters();
  for (std::uint32_t t = 0; t < n_tensors; ++t) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t ndims = read_u32(in);
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < ndims; ++d) count *= read_u32(in);
    auto it = std::find_if(params.begin(), params.end(),
                           [&](const ParamRef& r) { return r.name == name; });
    if (it == params.end() || it->count != count) {
      throw std::runtime_error("checkpoint tensor mismatch: " + name);
    }
    for (std::size_t k = 0; k < count; ++k) it->values[k] = read_f64(in);
  }
  if (!in) throw std::runtime_error("truncated checkpoint");
  return model;
}

}  // namespace rangecd
