#pragma once

#include <string>
#include <vector>

#include "scar/layers.hpp"
#include "scar/tensor.hpp"

namespace scar {

enum class Fusion { Concat, Sum };

// Row-wise softmax with per-row max subtraction. Input {rows, cols},
// output row-stochastic over the columns.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  const int rows = logits.dim(0), cols = logits.dim(1);
  Tensor<T> p(logits.shape);
  for (int r = 0; r < rows; ++r) {
    const T* in = logits.ptr() + static_cast<std::size_t>(r) * cols;
    T* out = p.ptr() + static_cast<std::size_t>(r) * cols;
    T mx = in[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    T sum = 0;
    for (int c = 0; c < cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      sum += out[c];
    }
    const T inv = T(1) / sum;
    for (int c = 0; c < cols; ++c) out[c] *= inv;
  }
  return p;
}

// d(loss)/d(logits) given the softmax output and d(loss)/d(probs).
template <typename T>
Tensor<T> softmax_rows_backward(const Tensor<T>& probs, const Tensor<T>& gprobs) {
  const int rows = probs.dim(0), cols = probs.dim(1);
  Tensor<T> gl(probs.shape);
  for (int r = 0; r < rows; ++r) {
    const T* p = probs.ptr() + static_cast<std::size_t>(r) * cols;
    const T* g = gprobs.ptr() + static_cast<std::size_t>(r) * cols;
    T* out = gl.ptr() + static_cast<std::size_t>(r) * cols;
    T dot = 0;
    for (int c = 0; c < cols; ++c) dot += g[c] * p[c];
    for (int c = 0; c < cols; ++c) out[c] = p[c] * (g[c] - dot);
  }
  return gl;
}

// Pairwise position attention. Entry (j, i) is position i's influence on
// position j: softmax over i of dot(s1_i, s2_j), where s1_i and s2_j are
// the per-position channel vectors. Returns an HW x HW row-stochastic map.
template <typename T>
Tensor<T> spatial_attention_matrix(const Tensor<T>& s1, const Tensor<T>& s2) {
  if (!s1.same_shape(s2)) throw ValidationError("spatial attention: operand shapes differ");
  if (s1.rank() != 3) throw ValidationError("spatial attention: expected C x H x W operands");
  const int c = s1.dim(0), n = s1.dim(1) * s1.dim(2);
  Tensor<T> logits({n, n});
  // logits[j][i] = sum_c s2(c, j) * s1(c, i)
  gemm(true, false, n, n, c, T(1), s2.ptr(), n, s1.ptr(), n, T(0), logits.ptr(), n);
  return softmax_rows(logits);
}

// Pairwise channel attention. c1 is C x HW (one row per channel
// descriptor), c2 is HW x C. Entry (j, i) is channel i's influence on
// channel j: softmax over i of dot(c1_i, c2_j). Returns C x C.
template <typename T>
Tensor<T> channel_attention_matrix(const Tensor<T>& c1, const Tensor<T>& c2) {
  if (c1.rank() != 2 || c2.rank() != 2 || c1.dim(1) != c2.dim(0) || c1.dim(0) != c2.dim(1))
    throw ValidationError("channel attention: c1 must be CxHW and c2 HWxC");
  const int c = c1.dim(0), hw = c1.dim(1);
  Tensor<T> prod({c, c});
  gemm(false, false, c, c, hw, T(1), c1.ptr(), hw, c2.ptr(), c, T(0), prod.ptr(), c);
  // logits[j][i] = prod[i][j]
  Tensor<T> logits({c, c});
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < c; ++i) logits.at(j, i) = prod.at(i, j);
  return softmax_rows(logits);
}

// Spatial-wise attention branch. Three 1x1 projections feed the pairwise
// position map; the attended context passes through a zero-initialized
// 1x1 conv (the learnable residual scale) and is added back onto the
// input, so a fresh branch is the identity.
template <typename T>
class SpatialAttention {
 public:
  SpatialAttention() = default;
  // reduction divides the channel width of the two projections feeding
  // the attention map; the value projection keeps full width.
  SpatialAttention(const std::string& prefix, int channels, int reduction, Rng& rng, InitKind kind)
      : channels_(channels),
        key_(prefix + "_key", channels, channels / reduction, 1),
        query_(prefix + "_query", channels, channels / reduction, 1),
        value_(prefix + "_value", channels, channels, 1),
        gate_(prefix + "_gate", channels, channels, 1) {
    if (channels % reduction != 0) throw ValidationError("attention reduction must divide C");
    key_.init(rng, kind);
    query_.init(rng, kind);
    value_.init(rng, kind);
    gate_.weight().value.zero();  // identity branch at init
    gate_.bias().value.zero();
  }

  Tensor<T> forward(const Tensor<T>& f) {
    if (f.dim(0) != channels_) throw ValidationError("spatial attention: channel mismatch");
    h_ = f.dim(1);
    w_ = f.dim(2);
    const int n = h_ * w_;
    s1_ = key_.forward(f);
    s2_ = query_.forward(f);
    s3_ = value_.forward(f);
    attn_ = spatial_attention_matrix(s1_, s2_);
    // context[c][j] = sum_i attn[j][i] * s3[c][i]
    context_ = Tensor<T>({channels_, h_, w_});
    gemm(false, true, channels_, n, n, T(1), s3_.ptr(), n, attn_.ptr(), n, T(0), context_.ptr(), n);
    Tensor<T> y = gate_.forward(context_);
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += f.data[i];
    out_ = y;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int n = h_ * w_;
    Tensor<T> gcontext = gate_.backward(gy);
    // Residual path.
    Tensor<T> gf = gy;
    // gs3[c][i] = sum_j gcontext[c][j] * attn[j][i]
    Tensor<T> gs3({channels_, h_, w_});
    gemm(false, false, channels_, n, n, T(1), gcontext.ptr(), n, attn_.ptr(), n, T(0), gs3.ptr(),
         n);
    // gattn[j][i] = sum_c gcontext[c][j] * s3[c][i]
    Tensor<T> gattn({n, n});
    gemm(true, false, n, n, channels_, T(1), gcontext.ptr(), n, s3_.ptr(), n, T(0), gattn.ptr(), n);
    Tensor<T> glogits = softmax_rows_backward(attn_, gattn);
    // logits[j][i] = dot(s1_i, s2_j)
    const int cr = key_.out_channels();
    Tensor<T> gs1({cr, h_, w_});
    gemm(false, false, cr, n, n, T(1), s2_.ptr(), n, glogits.ptr(), n, T(0), gs1.ptr(), n);
    Tensor<T> gs2({cr, h_, w_});
    gemm(false, true, cr, n, n, T(1), s1_.ptr(), n, glogits.ptr(), n, T(0), gs2.ptr(), n);
    accumulate(gf, key_.backward(gs1));
    accumulate(gf, query_.backward(gs2));
    accumulate(gf, value_.backward(gs3));
    return gf;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto* c : {&key_, &query_, &value_, &gate_})
      for (auto* p : c->params()) out.push_back(p);
    return out;
  }

  const Tensor<T>& last_output() const { return out_; }
  const Tensor<T>& last_attention() const { return attn_; }
  int channels() const { return channels_; }

  void set_training(bool training) {
    for (auto* c : {&key_, &query_, &value_, &gate_}) c->set_training(training);
  }

 private:
  static void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
  }

  int channels_ = 0, h_ = 0, w_ = 0;
  Conv2d<T> key_, query_, value_, gate_;
  Tensor<T> s1_, s2_, s3_, attn_, context_, out_;
};

// Channel-wise attention branch. A single 1x1 projection produces the
// channel descriptors; key, query and value all share it. The attended
// context passes through a zero-initialized 1x1 conv and is added back
// onto the input.
template <typename T>
class ChannelAttention {
 public:
  ChannelAttention() = default;
  ChannelAttention(const std::string& prefix, int channels, Rng& rng, InitKind kind)
      : channels_(channels),
        proj_(prefix + "_proj", channels, channels, 1),
        gate_(prefix + "_gate", channels, channels, 1) {
    proj_.init(rng, kind);
    gate_.weight().value.zero();
    gate_.bias().value.zero();
  }

  Tensor<T> forward(const Tensor<T>& f) {
    if (f.dim(0) != channels_) throw ValidationError("channel attention: channel mismatch");
    h_ = f.dim(1);
    w_ = f.dim(2);
    const int n = h_ * w_;
    c1_ = proj_.forward(f);  // viewed as C x HW
    // logits[j][i] = dot(c1_i, c1_j): symmetric, so the transpose is free.
    Tensor<T> logits({channels_, channels_});
    gemm(false, true, channels_, channels_, n, T(1), c1_.ptr(), n, c1_.ptr(), n, T(0),
         logits.ptr(), channels_);
    attn_ = softmax_rows(logits);
    // context[j][p] = sum_i attn[j][i] * c1[i][p]
    context_ = Tensor<T>({channels_, h_, w_});
    gemm(false, false, channels_, n, channels_, T(1), attn_.ptr(), channels_, c1_.ptr(), n, T(0),
         context_.ptr(), n);
    Tensor<T> y = gate_.forward(context_);
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += f.data[i];
    out_ = y;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int n = h_ * w_;
    Tensor<T> gcontext = gate_.backward(gy);
    Tensor<T> gf = gy;
    // gc1 from the value path: gc1[i][p] += sum_j attn[j][i] * gcontext[j][p]
    Tensor<T> gc1({channels_, h_, w_});
    gemm(true, false, channels_, n, channels_, T(1), attn_.ptr(), channels_, gcontext.ptr(), n,
         T(0), gc1.ptr(), n);
    // gattn[j][i] = dot(gcontext_j, c1_i)
    Tensor<T> gattn({channels_, channels_});
    gemm(false, true, channels_, channels_, n, T(1), gcontext.ptr(), n, c1_.ptr(), n, T(0),
         gattn.ptr(), channels_);
    Tensor<T> glogits = softmax_rows_backward(attn_, gattn);
    // logits[j][i] = dot(c1_i, c1_j) contributes through both arguments.
    gemm(false, false, channels_, n, channels_, T(1), glogits.ptr(), channels_, c1_.ptr(), n, T(1),
         gc1.ptr(), n);
    gemm(true, false, channels_, n, channels_, T(1), glogits.ptr(), channels_, c1_.ptr(), n, T(1),
         gc1.ptr(), n);
    accumulate(gf, proj_.backward(gc1));
    return gf;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto* c : {&proj_, &gate_})
      for (auto* p : c->params()) out.push_back(p);
    return out;
  }

  const Tensor<T>& last_output() const { return out_; }
  const Tensor<T>& last_attention() const { return attn_; }
  int channels() const { return channels_; }

  void set_training(bool training) {
    proj_.set_training(training);
    gate_.set_training(training);
  }

 private:
  static void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
  }

  int channels_ = 0, h_ = 0, w_ = 0;
  Conv2d<T> proj_, gate_;
  Tensor<T> c1_, attn_, context_, out_;
};

// Combine the two branch outputs: channel concatenation (spatial branch
// first) or elementwise sum.
template <typename T>
Tensor<T> fuse(const Tensor<T>& sam_out, const Tensor<T>& cam_out, Fusion strategy) {
  if (!sam_out.same_shape(cam_out)) throw ValidationError("fuse: branch shapes differ");
  if (strategy == Fusion::Sum) {
    Tensor<T> y = sam_out;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += cam_out.data[i];
    return y;
  }
  Tensor<T> y({sam_out.dim(0) * 2, sam_out.dim(1), sam_out.dim(2)});
  std::copy(sam_out.data.begin(), sam_out.data.end(), y.data.begin());
  std::copy(cam_out.data.begin(), cam_out.data.end(), y.data.begin() + sam_out.numel());
  return y;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> fuse_backward(const Tensor<T>& gy, int branch_channels,
                                              Fusion strategy) {
  if (strategy == Fusion::Sum) return {gy, gy};
  Tensor<T> ga({branch_channels, gy.dim(1), gy.dim(2)});
  Tensor<T> gb({branch_channels, gy.dim(1), gy.dim(2)});
  std::copy(gy.data.begin(), gy.data.begin() + ga.numel(), ga.data.begin());
  std::copy(gy.data.begin() + ga.numel(), gy.data.end(), gb.data.begin());
  return {ga, gb};
}

}  // namespace scar
