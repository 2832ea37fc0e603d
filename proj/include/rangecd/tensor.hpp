#ifndef RANGECD_TENSOR_HPP
#define RANGECD_TENSOR_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rangecd {

/// Dense CHW tensor, double precision.
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), data(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}

  double& at(int ci, int y, int x) {
    return data[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  double at(int ci, int y, int x) const {
    return data[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  std::size_t size() const { return data.size(); }
  void zero() { data.assign(data.size(), 0.0); }
};

/// Convolution kernel, OIHW layout.
struct Kernel {
  int oc = 0, ic = 0, kh = 0, kw = 0;
  std::vector<double> data;

  Kernel() = default;
  Kernel(int oc_, int ic_, int kh_, int kw_)
      : oc(oc_), ic(ic_), kh(kh_), kw(kw_),
        data(static_cast<std::size_t>(oc_) * ic_ * kh_ * kw_, 0.0) {}

  double& at(int o, int i, int y, int x) {
    return data[((static_cast<std::size_t>(o) * ic + i) * kh + y) * kw + x];
  }
  double at(int o, int i, int y, int x) const {
    return data[((static_cast<std::size_t>(o) * ic + i) * kh + y) * kw + x];
  }
  std::size_t size() const { return data.size(); }
  void zero() { data.assign(data.size(), 0.0); }
};

// Same-size 2D convolution with zero padding vertically and circular
// (azimuthal wrap) padding horizontally.
Tensor conv2d_forward(const Tensor& in, const Kernel& k, const std::vector<double>& bias);
void conv2d_backward(const Tensor& in, const Kernel& k, const Tensor& dout, Kernel& dk,
                     std::vector<double>& dbias, Tensor& din);

// In-place ReLU; backward masks by the forward output.
void relu_forward(Tensor& t);
void relu_backward(const Tensor& activated, Tensor& grad);

// 2x2 max pooling with stride 2; argmax recorded for the backward pass.
Tensor maxpool2_forward(const Tensor& in, std::vector<std::uint32_t>& argmax);
Tensor maxpool2_backward(const Tensor& dout, const std::vector<std::uint32_t>& argmax, int in_h,
                         int in_w);

// x2 bilinear upsampling; horizontal axis wraps, vertical clamps.
Tensor upsample2_forward(const Tensor& in);
Tensor upsample2_backward(const Tensor& dout, int in_h, int in_w);

Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& grad, Tensor& da, Tensor& db);

}  // namespace rangecd

#endif
