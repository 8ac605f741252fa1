#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scar/errors.hpp"
#include "scar/rng.hpp"
#include "scar/tensor.hpp"

namespace scar {

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  explicit Param(std::string n = {}) : name(std::move(n)) {}
  void init_shape(std::vector<int> shape) {
    value = Tensor<T>(shape);
    grad = Tensor<T>(std::move(shape));
  }
  void zero_grad() { grad.zero(); }
};

enum class InitKind {
  Gaussian001,  // N(0, 0.01^2), zero bias
  Msra,         // N(0, sqrt(2 / fan_in)), zero bias
};

// 2-D convolution, stride 1, odd kernel, symmetric zero padding sized to
// preserve the spatial dims (padding = dilation * (k-1) / 2). Forward runs
// as im2col + GEMM; the col buffer is kept for the backward pass.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_ch, int out_ch, int ksize, int dilation = 1)
      : name_(std::move(name)),
        in_ch_(in_ch),
        out_ch_(out_ch),
        ksize_(ksize),
        dilation_(dilation),
        pad_(dilation * (ksize - 1) / 2),
        weight_(name_ + ".weight"),
        bias_(name_ + ".bias") {
    if (ksize % 2 == 0) throw ValidationError("conv kernel must be odd: " + name_);
    if (dilation < 1) throw ValidationError("conv dilation must be >= 1: " + name_);
    weight_.init_shape({out_ch_, in_ch_, ksize_, ksize_});
    bias_.init_shape({out_ch_});
  }

  void init(Rng& rng, InitKind kind) {
    double stddev = 0.01;
    if (kind == InitKind::Msra) {
      double fan_in = static_cast<double>(in_ch_) * ksize_ * ksize_;
      stddev = std::sqrt(2.0 / fan_in);
    }
    for (auto& w : weight_.value.data) w = static_cast<T>(rng.normal(0.0, stddev));
    bias_.value.zero();
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.rank() != 3 || x.dim(0) != in_ch_)
      throw ValidationError("conv " + name_ + ": expected " + std::to_string(in_ch_) +
                            " input channels, got " + shape_str(x));
    h_ = x.dim(1);
    w_ = x.dim(2);
    const int hw = h_ * w_;
    Tensor<T> y({out_ch_, h_, w_});
    if (ksize_ == 1) {
      if (training_) input_ = x;  // 1x1 convs use the input itself as the col matrix
      gemm(false, false, out_ch_, hw, in_ch_, T(1), weight_.value.ptr(), in_ch_, x.ptr(), hw, T(0),
           y.ptr(), hw);
    } else {
      // In inference mode the col buffer is scoped to this call so big
      // inputs do not pin gigabytes across the layer stack.
      std::vector<T> local;
      std::vector<T>& col = training_ ? col_ : local;
      im2col(x, col);
      const int k2 = in_ch_ * ksize_ * ksize_;
      gemm(false, false, out_ch_, hw, k2, T(1), weight_.value.ptr(), k2, col.data(), hw, T(0),
           y.ptr(), hw);
    }
    T* yp = y.ptr();
    for (int o = 0; o < out_ch_; ++o) {
      T b = bias_.value.data[o];
      for (int i = 0; i < hw; ++i) yp[o * hw + i] += b;
    }
    return y;
  }

  // Accumulates weight/bias grads; returns grad w.r.t. the input unless
  // need_input_grad is false (first layer of the net).
  Tensor<T> backward(const Tensor<T>& gy, bool need_input_grad = true) {
    const int hw = h_ * w_;
    const T* gp = gy.ptr();
    for (int o = 0; o < out_ch_; ++o) {
      T s = 0;
      for (int i = 0; i < hw; ++i) s += gp[o * hw + i];
      bias_.grad.data[o] += s;
    }
    Tensor<T> gx;
    if (ksize_ == 1) {
      gemm(false, true, out_ch_, in_ch_, hw, T(1), gy.ptr(), hw, input_.ptr(), hw, T(1),
           weight_.grad.ptr(), in_ch_);
      if (need_input_grad) {
        gx = Tensor<T>({in_ch_, h_, w_});
        gemm(true, false, in_ch_, hw, out_ch_, T(1), weight_.value.ptr(), in_ch_, gy.ptr(), hw,
             T(0), gx.ptr(), hw);
      }
    } else {
      const int k2 = in_ch_ * ksize_ * ksize_;
      gemm(false, true, out_ch_, k2, hw, T(1), gy.ptr(), hw, col_.data(), hw, T(1),
           weight_.grad.ptr(), k2);
      if (need_input_grad) {
        colgrad_.assign(static_cast<std::size_t>(k2) * hw, T(0));
        gemm(true, false, k2, hw, out_ch_, T(1), weight_.value.ptr(), k2, gy.ptr(), hw, T(0),
             colgrad_.data(), hw);
        gx = col2im();
      }
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&weight_, &bias_}; }
  const std::string& name() const { return name_; }
  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }
  int ksize() const { return ksize_; }
  int dilation() const { return dilation_; }
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

  void set_training(bool training) {
    training_ = training;
    if (!training_) drop_cache();
  }

  // Release cached activations (after an optimizer step).
  void drop_cache() {
    input_ = Tensor<T>();
    col_.clear();
    col_.shrink_to_fit();
    colgrad_.clear();
    colgrad_.shrink_to_fit();
  }

 private:
  static std::string shape_str(const Tensor<T>& t) {
    std::string s = "(";
    for (int i = 0; i < t.rank(); ++i) s += (i ? "x" : "") + std::to_string(t.dim(i));
    return s + ")";
  }

  void im2col(const Tensor<T>& x, std::vector<T>& col) const {
    const int hw = h_ * w_;
    col.assign(static_cast<std::size_t>(in_ch_) * ksize_ * ksize_ * hw, T(0));
    const T* xp = x.ptr();
    for (int c = 0; c < in_ch_; ++c) {
      for (int ky = 0; ky < ksize_; ++ky) {
        for (int kx = 0; kx < ksize_; ++kx) {
          T* row = col.data() + (static_cast<std::size_t>((c * ksize_ + ky) * ksize_ + kx)) * hw;
          const int oy = ky * dilation_ - pad_;
          const int ox = kx * dilation_ - pad_;
          for (int y = 0; y < h_; ++y) {
            const int sy = y + oy;
            if (sy < 0 || sy >= h_) continue;
            const int x0 = std::max(0, -ox);
            const int x1 = std::min(w_, w_ - ox);
            const T* src = xp + (static_cast<std::size_t>(c) * h_ + sy) * w_ + (x0 + ox);
            T* dst = row + static_cast<std::size_t>(y) * w_ + x0;
            for (int i = 0; i < x1 - x0; ++i) dst[i] = src[i];
          }
        }
      }
    }
  }

  Tensor<T> col2im() const {
    Tensor<T> gx({in_ch_, h_, w_});
    const int hw = h_ * w_;
    T* xp = gx.ptr();
    for (int c = 0; c < in_ch_; ++c) {
      for (int ky = 0; ky < ksize_; ++ky) {
        for (int kx = 0; kx < ksize_; ++kx) {
          const T* row =
              colgrad_.data() + (static_cast<std::size_t>((c * ksize_ + ky) * ksize_ + kx)) * hw;
          const int oy = ky * dilation_ - pad_;
          const int ox = kx * dilation_ - pad_;
          for (int y = 0; y < h_; ++y) {
            const int sy = y + oy;
            if (sy < 0 || sy >= h_) continue;
            const int x0 = std::max(0, -ox);
            const int x1 = std::min(w_, w_ - ox);
            T* dst = xp + (static_cast<std::size_t>(c) * h_ + sy) * w_ + (x0 + ox);
            const T* src = row + static_cast<std::size_t>(y) * w_ + x0;
            for (int i = 0; i < x1 - x0; ++i) dst[i] += src[i];
          }
        }
      }
    }
    return gx;
  }

  std::string name_;
  int in_ch_ = 0, out_ch_ = 0, ksize_ = 0, dilation_ = 1, pad_ = 0;
  int h_ = 0, w_ = 0;
  bool training_ = true;
  Param<T> weight_, bias_;
  Tensor<T> input_;        // cached for 1x1 backward
  std::vector<T> col_;     // cached for kxk backward
  std::vector<T> colgrad_;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool cache = true) {
    Tensor<T> y = x;
    for (auto& v : y.data)
      if (v < T(0)) v = T(0);
    if (cache) out_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) const {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      if (out_.data[i] <= T(0)) gx.data[i] = T(0);
    return gx;
  }

 private:
  Tensor<T> out_;
};

// 2x2 max pooling, stride 2. Input dims must be even.
template <typename T>
class MaxPool2 {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h % 2 || w % 2) throw ValidationError("maxpool input dims must be even");
    in_h_ = h;
    in_w_ = w;
    Tensor<T> y({c, h / 2, w / 2});
    argmax_.resize(y.numel());
    const T* xp = x.ptr();
    T* yp = y.ptr();
    std::size_t oi = 0;
    for (int ch = 0; ch < c; ++ch) {
      const T* plane = xp + static_cast<std::size_t>(ch) * h * w;
      for (int y0 = 0; y0 < h; y0 += 2) {
        for (int x0 = 0; x0 < w; x0 += 2, ++oi) {
          std::size_t base = static_cast<std::size_t>(y0) * w + x0;
          std::size_t best = base;
          T bv = plane[base];
          const std::size_t cand[3] = {base + 1, base + w, base + w + 1};
          for (std::size_t k : cand) {
            if (plane[k] > bv) {
              bv = plane[k];
              best = k;
            }
          }
          yp[oi] = bv;
          argmax_[oi] = static_cast<std::uint32_t>(best);
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) const {
    const int c = gy.dim(0);
    Tensor<T> gx({c, in_h_, in_w_});
    const T* gp = gy.ptr();
    T* xp = gx.ptr();
    const std::size_t plane = static_cast<std::size_t>(in_h_) * in_w_;
    const std::size_t out_plane = gy.numel() / c;
    for (int ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < out_plane; ++i)
        xp[ch * plane + argmax_[ch * out_plane + i]] += gp[ch * out_plane + i];
    return gx;
  }

 private:
  int in_h_ = 0, in_w_ = 0;
  std::vector<std::uint32_t> argmax_;
};

// Bilinear upsampling by an integer factor, followed by a uniform
// 1/factor^2 rescale so the map sum is preserved away from borders.
// Source coords use the half-pixel convention with edge clamping.
template <typename T>
class BilinearUpsample {
 public:
  explicit BilinearUpsample(int factor = 8) : factor_(factor) {}

  Tensor<T> forward(const Tensor<T>& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    in_h_ = h;
    in_w_ = w;
    const int oh = h * factor_, ow = w * factor_;
    Tensor<T> y({c, oh, ow});
    const T scale = T(1) / static_cast<T>(factor_ * factor_);
    std::vector<int> x0s(ow), x1s(ow);
    std::vector<T> wxs(ow);
    for (int ox = 0; ox < ow; ++ox) sample_axis(ox, w, x0s[ox], x1s[ox], wxs[ox]);
    const T* xp = x.ptr();
    T* yp = y.ptr();
    for (int ch = 0; ch < c; ++ch) {
      const T* plane = xp + static_cast<std::size_t>(ch) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        int y0, y1;
        T wy;
        sample_axis(oy, h, y0, y1, wy);
        const T* r0 = plane + static_cast<std::size_t>(y0) * w;
        const T* r1 = plane + static_cast<std::size_t>(y1) * w;
        T* orow = yp + (static_cast<std::size_t>(ch) * oh + oy) * ow;
        for (int ox = 0; ox < ow; ++ox) {
          const T a = r0[x0s[ox]] * (T(1) - wxs[ox]) + r0[x1s[ox]] * wxs[ox];
          const T b = r1[x0s[ox]] * (T(1) - wxs[ox]) + r1[x1s[ox]] * wxs[ox];
          orow[ox] = (a * (T(1) - wy) + b * wy) * scale;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) const {
    const int c = gy.dim(0), oh = gy.dim(1), ow = gy.dim(2);
    Tensor<T> gx({c, in_h_, in_w_});
    const T scale = T(1) / static_cast<T>(factor_ * factor_);
    const T* gp = gy.ptr();
    T* xp = gx.ptr();
    for (int ch = 0; ch < c; ++ch) {
      T* plane = xp + static_cast<std::size_t>(ch) * in_h_ * in_w_;
      for (int oy = 0; oy < oh; ++oy) {
        int y0, y1;
        T wy;
        sample_axis(oy, in_h_, y0, y1, wy);
        for (int ox = 0; ox < ow; ++ox) {
          int x0, x1;
          T wx;
          sample_axis(ox, in_w_, x0, x1, wx);
          const T g = gp[(static_cast<std::size_t>(ch) * oh + oy) * ow + ox] * scale;
          plane[static_cast<std::size_t>(y0) * in_w_ + x0] += g * (T(1) - wy) * (T(1) - wx);
          plane[static_cast<std::size_t>(y0) * in_w_ + x1] += g * (T(1) - wy) * wx;
          plane[static_cast<std::size_t>(y1) * in_w_ + x0] += g * wy * (T(1) - wx);
          plane[static_cast<std::size_t>(y1) * in_w_ + x1] += g * wy * wx;
        }
      }
    }
    return gx;
  }

  int factor() const { return factor_; }

 private:
  void sample_axis(int out_i, int in_n, int& i0, int& i1, T& frac) const {
    const double src = (out_i + 0.5) / factor_ - 0.5;
    double f = std::floor(src);
    int i = static_cast<int>(f);
    double t = src - f;
    if (i < 0) {
      i = 0;
      t = 0.0;
    }
    if (i >= in_n - 1) {
      i = in_n - 1;
      t = 0.0;
    }
    i0 = i;
    i1 = std::min(i + 1, in_n - 1);
    frac = static_cast<T>(t);
  }

  int factor_ = 8;
  int in_h_ = 0, in_w_ = 0;
};

}  // namespace scar
