#include "rangecd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rangecd {

namespace {
inline int wrap(int x, int w) {
  x %= w;
  return x < 0 ? x + w : x;
}
}  // namespace

Tensor conv2d_forward(const Tensor& in, const Kernel& k, const std::vector<double>& bias) {
  if (in.c != k.ic) throw std::invalid_argument("conv2d: channel mismatch");
  if (static_cast<int>(bias.size()) != k.oc) throw std::invalid_argument("conv2d: bias mismatch");
  const int pad_top = (k.kh - 1) / 2;
  const int pad_left = (k.kw - 1) / 2;
  Tensor out(k.oc, in.h, in.w);
  for (int o = 0; o < k.oc; ++o) {
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x) {
        double acc = bias[o];
        for (int i = 0; i < k.ic; ++i) {
          for (int dy = 0; dy < k.kh; ++dy) {
            const int iy = y + dy - pad_top;
            if (iy < 0 || iy >= in.h) continue;
            for (int dx = 0; dx < k.kw; ++dx) {
              const int ix = wrap(x + dx - pad_left, in.w);
              acc += in.at(i, iy, ix) * k.at(o, i, dy, dx);
            }
          }
        }
        out.at(o, y, x) = acc;
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& in, const Kernel& k, const Tensor& dout, Kernel& dk,
                     std::vector<double>& dbias, Tensor& din) {
  const int pad_top = (k.kh - 1) / 2;
  const int pad_left = (k.kw - 1) / 2;
  dk = Kernel(k.oc, k.ic, k.kh, k.kw);
  dbias.assign(k.oc, 0.0);
  din = Tensor(in.c, in.h, in.w);
  for (int o = 0; o < k.oc; ++o) {
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x) {
        const double g = dout.at(o, y, x);
        if (g == 0.0) continue;
        dbias[o] += g;
        for (int i = 0; i < k.ic; ++i) {
          for (int dy = 0; dy < k.kh; ++dy) {
            const int iy = y + dy - pad_top;
            if (iy < 0 || iy >= in.h) continue;
            for (int dx = 0; dx < k.kw; ++dx) {
              const int ix = wrap(x + dx - pad_left, in.w);
              dk.at(o, i, dy, dx) += g * in.at(i, iy, ix);
              din.at(i, iy, ix) += g * k.at(o, i, dy, dx);
            }
          }
        }
      }
    }
  }
}

void relu_forward(Tensor& t) {
  for (double& v : t.data) v = std::max(v, 0.0);
}

void relu_backward(const Tensor& activated, Tensor& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (activated.data[i] <= 0.0) grad.data[i] = 0.0;
  }
}

Tensor maxpool2_forward(const Tensor& in, std::vector<std::uint32_t>& argmax) {
  if (in.h % 2 != 0 || in.w % 2 != 0) throw std::invalid_argument("maxpool2: odd input size");
  Tensor out(in.c, in.h / 2, in.w / 2);
  argmax.assign(out.size(), 0);
  std::size_t k = 0;
  for (int c = 0; c < in.c; ++c) {
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x, ++k) {
        double best = -std::numeric_limits<double>::infinity();
        std::uint32_t best_idx = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int iy = 2 * y + dy, ix = 2 * x + dx;
            const double v = in.at(c, iy, ix);
            if (v > best) {
              best = v;
              best_idx = static_cast<std::uint32_t>((static_cast<std::size_t>(c) * in.h + iy) * in.w + ix);
            }
          }
        }
        out.at(c, y, x) = best;
        argmax[k] = best_idx;
      }
    }
  }
  return out;
}

Tensor maxpool2_backward(const Tensor& dout, const std::vector<std::uint32_t>& argmax, int in_h,
                         int in_w) {
  Tensor din(dout.c, in_h, in_w);
  for (std::size_t k = 0; k < dout.data.size(); ++k) {
    din.data[argmax[k]] += dout.data[k];
  }
  return din;
}

namespace {

struct LerpTap {
  int i0, i1;
  double w0, w1;
};

// Source taps for x2 upsampling at output index o over `n` input samples.
LerpTap up_taps(int o, int n, bool wrap_axis) {
  const double s = (o + 0.5) / 2.0 - 0.5;
  int i0 = static_cast<int>(std::floor(s));
  const double w1 = s - i0;
  int i1 = i0 + 1;
  if (wrap_axis) {
    i0 = wrap(i0, n);
    i1 = wrap(i1, n);
  } else {
    i0 = std::clamp(i0, 0, n - 1);
    i1 = std::clamp(i1, 0, n - 1);
  }
  return {i0, i1, 1.0 - w1, w1};
}

}  // namespace

Tensor upsample2_forward(const Tensor& in) {
  Tensor out(in.c, in.h * 2, in.w * 2);
  for (int c = 0; c < in.c; ++c) {
    for (int y = 0; y < out.h; ++y) {
      const LerpTap ty = up_taps(y, in.h, false);
      for (int x = 0; x < out.w; ++x) {
        const LerpTap tx = up_taps(x, in.w, true);
        out.at(c, y, x) = ty.w0 * (tx.w0 * in.at(c, ty.i0, tx.i0) + tx.w1 * in.at(c, ty.i0, tx.i1)) +
                          ty.w1 * (tx.w0 * in.at(c, ty.i1, tx.i0) + tx.w1 * in.at(c, ty.i1, tx.i1));
      }
    }
  }
  return out;
}

Tensor upsample2_backward(const Tensor& dout, int in_h, int in_w) {
  Tensor din(dout.c, in_h, in_w);
  for (int c = 0; c < dout.c; ++c) {
    for (int y = 0; y < dout.h; ++y) {
      const LerpTap ty = up_taps(y, in_h, false);
      for (int x = 0; x < dout.w; ++x) {
        const LerpTap tx = up_taps(x, in_w, true);
        const double g = dout.at(c, y, x);
        din.at(c, ty.i0, tx.i0) += g * ty.w0 * tx.w0;
        din.at(c, ty.i0, tx.i1) += g * ty.w0 * tx.w1;
        din.at(c, ty.i1, tx.i0) += g * ty.w1 * tx.w0;
        din.at(c, ty.i1, tx.i1) += g * ty.w1 * tx.w1;
      }
    }
  }
  return din;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.h != b.h || a.w != b.w) throw std::invalid_argument("concat: size mismatch");
  Tensor out(a.c + b.c, a.h, a.w);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

void split_channels(const Tensor& grad, Tensor& da, Tensor& db) {
  std::copy(grad.data.begin(), grad.data.begin() + da.data.size(), da.data.begin());
  std::copy(grad.data.begin() + da.data.size(), grad.data.end(), db.data.begin());
}

}  // namespace rangecd
