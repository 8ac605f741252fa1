#pragma once

#include <cstdio>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

#include "scar/attention.hpp"
#include "scar/backbone.hpp"
#include "scar/dataset.hpp"
#include "scar/density.hpp"
#include "scar/io.hpp"
#include "scar/layers.hpp"

namespace scar {

enum class Variant { FCN, FCN_SAM, FCN_CAM, SCAR };
enum class ImageNorm { Unit, ImageNet };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
Fusion parse_fusion(const std::string& name);
std::string fusion_name(Fusion f);

struct ModelConfig {
  Variant variant = Variant::SCAR;
  Fusion fusion = Fusion::Concat;
  int conv1_channels = 64;
  int conv2_channels = 128;
  int conv3_channels = 256;  // VGG-16 value; set 128 to follow the published table literally
  int conv4_channels = 512;
  int attention_channels = 64;
  int sam_reduction = 1;
  InitKind init = InitKind::Gaussian001;
  ImageNorm normalization = ImageNorm::Unit;
  double gt_scale = 1.0;  // training-time multiplier on GT maps; predictions divide it back out

  // Small channel widths for finite-difference checks and fast tests.
  static ModelConfig tiny(Variant v = Variant::SCAR, Fusion f = Fusion::Concat) {
    ModelConfig c;
    c.variant = v;
    c.fusion = f;
    c.conv1_channels = 4;
    c.conv2_channels = 6;
    c.conv3_channels = 8;
    c.conv4_channels = 8;
    c.attention_channels = 4;
    return c;
  }

  int regression_input_channels() const {
    if (variant == Variant::SCAR && fusion == Fusion::Concat) return attention_channels * 2;
    return attention_channels;
  }
};

struct PredictionResult {
  DensityMap density;  // at input resolution
  double count = 0.0;  // sum of the returned map
};

// The assembled density regressor: VGG front + dilation module, the
// optional attention branches, a 1x1 regression conv with ReLU, and the
// sum-preserving x8 bilinear upsample.
template <typename T>
class ScarNet {
 public:
  ScarNet(const ModelConfig& config, std::uint64_t seed) : cfg_(config), up_(8) {
    Rng rng(seed);
    backbone_ = ConvStack<T>(3,
                             vgg10_layout(cfg_.conv1_channels, cfg_.conv2_channels,
                                          cfg_.conv3_channels, cfg_.conv4_channels),
                             rng, cfg_.init);
    dilation_ = ConvStack<T>(cfg_.conv4_channels,
                             dilation_layout(cfg_.conv4_channels, cfg_.attention_channels), rng,
                             cfg_.init);
    if (cfg_.variant == Variant::FCN_SAM || cfg_.variant == Variant::SCAR)
      sam_.emplace("sam", cfg_.attention_channels, cfg_.sam_reduction, rng, cfg_.init);
    if (cfg_.variant == Variant::FCN_CAM || cfg_.variant == Variant::SCAR)
      cam_.emplace("cam", cfg_.attention_channels, rng, cfg_.init);
    regression_ = Conv2d<T>("regression", cfg_.regression_input_channels(), 1, 1);
    regression_.init(rng, cfg_.init);
  }

  // image: normalized 3 x H x W with H, W divisible by 8.
  Tensor<T> forward(const Tensor<T>& image) {
    check_divisible(image.dim(1), image.dim(2));
    Tensor<T> f = dilation_.forward(backbone_.forward(image));
    Tensor<T> head;
    switch (cfg_.variant) {
      case Variant::FCN:
        head = f;
        break;
      case Variant::FCN_SAM:
        head = sam_->forward(f);
        break;
      case Variant::FCN_CAM:
        head = cam_->forward(f);
        break;
      case Variant::SCAR:
        head = fuse(sam_->forward(f), cam_->forward(f), cfg_.fusion);
        break;
    }
    Tensor<T> density = relu_.forward(regression_.forward(head), training_);
    return up_.forward(density);
  }

  void set_training(bool training) {
    training_ = training;
    backbone_.set_training(training);
    dilation_.set_training(training);
    if (sam_) sam_->set_training(training);
    if (cam_) cam_->set_training(training);
    regression_.set_training(training);
  }
  bool training() const { return training_; }

  void backward(const Tensor<T>& gy) {
    Tensor<T> g = relu_.backward(up_.backward(gy));
    g = regression_.backward(g);
    switch (cfg_.variant) {
      case Variant::FCN:
        break;
      case Variant::FCN_SAM:
        g = sam_->backward(g);
        break;
      case Variant::FCN_CAM:
        g = cam_->backward(g);
        break;
      case Variant::SCAR: {
        auto [gs, gc] = fuse_backward(g, cfg_.attention_channels, cfg_.fusion);
        g = sam_->backward(gs);
        const Tensor<T> gcam = cam_->backward(gc);
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += gcam.data[i];
        break;
      }
    }
    backbone_.backward(dilation_.backward(g), /*need_input_grad=*/false);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out = backbone_.params();
    for (auto* p : dilation_.params()) out.push_back(p);
    if (sam_) for (auto* p : sam_->params()) out.push_back(p);
    if (cam_) for (auto* p : cam_->params()) out.push_back(p);
    for (auto* p : regression_.params()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  // Per-channel normalization: ImageNet statistics when pretrained VGG
  // weights are in play, plain [0,1] scaling otherwise.
  Tensor<T> normalize_image(const Image& img) const {
    static constexpr double kMean[3] = {0.485, 0.456, 0.406};
    static constexpr double kStd[3] = {0.229, 0.224, 0.225};
    Tensor<T> out({3, img.h, img.w});
    for (int c = 0; c < 3; ++c) {
      T* plane = out.ptr() + static_cast<std::size_t>(c) * img.h * img.w;
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
          double v = img.at(y, x, c) / 255.0;
          if (cfg_.normalization == ImageNorm::ImageNet) v = (v - kMean[c]) / kStd[c];
          plane[static_cast<std::size_t>(y) * img.w + x] = static_cast<T>(v);
        }
    }
    return out;
  }

  PredictionResult predict(const Image& img) {
    check_divisible(img.h, img.w);
    const bool was_training = training_;
    set_training(false);
    Tensor<T> out = forward(normalize_image(img));
    set_training(was_training);
    PredictionResult res;
    res.density = DensityMap(img.h, img.w);
    const double inv_scale = 1.0 / cfg_.gt_scale;
    for (std::size_t i = 0; i < out.data.size(); ++i)
      res.density.values[i] = static_cast<double>(out.data[i]) * inv_scale;
    res.count = res.density.sum();
    return res;
  }

  const ModelConfig& config() const { return cfg_; }
  bool has_sam() const { return sam_.has_value(); }
  bool has_cam() const { return cam_.has_value(); }
  SpatialAttention<T>& sam() { return *sam_; }
  ChannelAttention<T>& cam() { return *cam_; }
  ConvStack<T>& backbone() { return backbone_; }
  ConvStack<T>& dilation() { return dilation_; }
  Conv2d<T>& regression() { return regression_; }

  static void check_divisible(int h, int w) {
    if (h % 8 || w % 8)
      throw ValidationError("input " + std::to_string(h) + "x" + std::to_string(w) +
                            " not divisible by 8; pad or resize the image first");
  }

 private:
  ModelConfig cfg_;
  ConvStack<T> backbone_;
  ConvStack<T> dilation_;
  std::optional<SpatialAttention<T>> sam_;
  std::optional<ChannelAttention<T>> cam_;
  Conv2d<T> regression_;
  ReLU<T> relu_;
  BilinearUpsample<T> up_;
  bool training_ = true;
};

// Overwrites layer weights from a SCARWGT1 directory. Every tensor in
// the source must match a parameter by name and shape; extra parameters
// in the model keep their initialization (backbone-only sources are
// normal).
template <typename T>
void load_pretrained(ScarNet<T>& net, const std::filesystem::path& dir) {
  const WeightFile wf = load_weight_dir(dir);
  auto params = net.params();
  for (const auto& name : wf.order) {
    const Tensor<float>& src = wf.tensors.at(name);
    bool matched = false;
    for (auto* p : params) {
      if (p->name != name) continue;
      if (p->value.shape != src.shape)
        throw LoadError("pretrained tensor " + name + " has mismatched shape");
      for (std::size_t i = 0; i < src.data.size(); ++i)
        p->value.data[i] = static_cast<T>(src.data[i]);
      matched = true;
      break;
    }
    if (!matched) throw LoadError("pretrained tensor " + name + " matches no model layer");
  }
}

constexpr const char* kCheckpointFormat = "SCARCKPT1";

template <typename T>
void save_checkpoint(ScarNet<T>& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  for (auto* p : net.params()) tensors.emplace_back(p->name, p->value.template cast<float>());
  save_weight_dir(dir / "weights", tensors);
  const ModelConfig& c = net.config();
  char created[32];
  std::time_t now = std::time(nullptr);
  std::strftime(created, sizeof(created), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  char gt_scale[32];
  std::snprintf(gt_scale, sizeof(gt_scale), "%.9g", c.gt_scale);
  write_kv_file(dir / "meta.txt",
                {{"format", kCheckpointFormat},
                 {"variant", variant_name(c.variant)},
                 {"fusion", fusion_name(c.fusion)},
                 {"created", created},
                 {"conv1_channels", std::to_string(c.conv1_channels)},
                 {"conv2_channels", std::to_string(c.conv2_channels)},
                 {"conv3_channels", std::to_string(c.conv3_channels)},
                 {"conv4_channels", std::to_string(c.conv4_channels)},
                 {"attention_channels", std::to_string(c.attention_channels)},
                 {"sam_reduction", std::to_string(c.sam_reduction)},
                 {"normalization", c.normalization == ImageNorm::ImageNet ? "imagenet" : "unit"},
                 {"gt_scale", gt_scale}});
}

template <typename T>
ScarNet<T> load_checkpoint(const std::filesystem::path& dir,
                           std::optional<Variant> expected = std::nullopt) {
  const auto meta_path = dir / "meta.txt";
  if (!std::filesystem::exists(meta_path))
    throw LoadError("not a checkpoint directory (missing meta.txt): " + dir.string());
  const auto meta = read_kv_file(meta_path);
  auto need = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw LoadError("checkpoint meta missing key: " + key);
    return it->second;
  };
  if (need("format") != kCheckpointFormat)
    throw LoadError("checkpoint format mismatch: expected " + std::string(kCheckpointFormat) +
                    ", got " + need("format"));
  ModelConfig cfg;
  cfg.variant = parse_variant(need("variant"));
  if (expected && *expected != cfg.variant)
    throw LoadError("checkpoint holds variant " + need("variant") + ", expected " +
                    variant_name(*expected));
  cfg.fusion = parse_fusion(need("fusion"));
  cfg.conv1_channels = std::stoi(need("conv1_channels"));
  cfg.conv2_channels = std::stoi(need("conv2_channels"));
  cfg.conv3_channels = std::stoi(need("conv3_channels"));
  cfg.conv4_channels = std::stoi(need("conv4_channels"));
  cfg.attention_channels = std::stoi(need("attention_channels"));
  cfg.sam_reduction = std::stoi(need("sam_reduction"));
  cfg.normalization = need("normalization") == "imagenet" ? ImageNorm::ImageNet : ImageNorm::Unit;
  cfg.gt_scale = std::stod(need("gt_scale"));

  ScarNet<T> net(cfg, /*seed=*/0);
  const WeightFile wf = load_weight_dir(dir / "weights");
  auto params = net.params();
  if (wf.order.size() != params.size())
    throw LoadError("checkpoint holds " + std::to_string(wf.order.size()) + " tensors, model has " +
                    std::to_string(params.size()));
  for (auto* p : params) {
    auto it = wf.tensors.find(p->name);
    if (it == wf.tensors.end()) throw LoadError("checkpoint missing tensor " + p->name);
    if (it->second.shape != p->value.shape)
      throw LoadError("checkpoint tensor " + p->name + " has mismatched shape");
    for (std::size_t i = 0; i < p->value.data.size(); ++i)
      p->value.data[i] = static_cast<T>(it->second.data[i]);
  }
  return net;
}

}  // namespace scar
