#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scar/layers.hpp"

namespace scar {

// One entry of a sequential conv stack: conv + optional ReLU, then an
// optional 2x2 max pool.
struct StackLayerDef {
  std::string name;
  int out_channels = 0;
  int ksize = 3;
  int dilation = 1;
  bool relu = true;
  bool pool_after = false;
};

// The first 10 conv layers of a VGG-16-style net, three max poolings
// (output stride 8). conv3_channels defaults to the VGG value; 128
// honors the published table literally.
std::vector<StackLayerDef> vgg10_layout(int conv1, int conv2, int conv3, int conv4);

// Six dilated 3x3 convs, all dilation 2, channel schedule
// c -> c -> c -> c/2 -> c/4 -> out.
std::vector<StackLayerDef> dilation_layout(int in_channels, int out_channels);

// Sequential stack of convs/ReLUs/pools with a shared backward pass.
template <typename T>
class ConvStack {
 public:
  ConvStack() = default;
  ConvStack(int in_channels, const std::vector<StackLayerDef>& defs, Rng& rng, InitKind kind)
      : defs_(defs) {
    int ch = in_channels;
    for (const auto& d : defs) {
      convs_.emplace_back(d.name, ch, d.out_channels, d.ksize, d.dilation);
      convs_.back().init(rng, kind);
      ch = d.out_channels;
    }
    relus_.resize(convs_.size());
    pools_.resize(convs_.size());
    out_channels_ = ch;
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> cur = x;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      cur = convs_[i].forward(cur);
      if (defs_[i].relu) cur = relus_[i].forward(cur, training_);
      if (defs_[i].pool_after) cur = pools_[i].forward(cur);
    }
    return cur;
  }

  void set_training(bool training) {
    training_ = training;
    for (auto& c : convs_) c.set_training(training);
  }

  Tensor<T> backward(const Tensor<T>& gy, bool need_input_grad = true) {
    Tensor<T> g = gy;
    for (std::size_t k = convs_.size(); k-- > 0;) {
      if (defs_[k].pool_after) g = pools_[k].backward(g);
      if (defs_[k].relu) g = relus_[k].backward(g);
      g = convs_[k].backward(g, need_input_grad || k > 0);
    }
    return g;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto& c : convs_)
      for (auto* p : c.params()) out.push_back(p);
    return out;
  }

  int out_channels() const { return out_channels_; }
  std::size_t size() const { return convs_.size(); }
  Conv2d<T>& conv(std::size_t i) { return convs_[i]; }

  // Radius, in input pixels, of the output receptive field: each conv
  // grows it by scale * dilation * (k-1)/2, each pool doubles the scale.
  int receptive_radius() const {
    int radius = 0, scale = 1;
    for (const auto& d : defs_) {
      radius += scale * d.dilation * (d.ksize - 1) / 2;
      if (d.pool_after) scale *= 2;
    }
    return radius;
  }

  int total_pool_factor() const {
    int s = 1;
    for (const auto& d : defs_)
      if (d.pool_after) s *= 2;
    return s;
  }

 private:
  std::vector<StackLayerDef> defs_;
  std::vector<Conv2d<T>> convs_;
  std::vector<ReLU<T>> relus_;
  std::vector<MaxPool2<T>> pools_;
  int out_channels_ = 0;
  bool training_ = true;
};

}  // namespace scar
