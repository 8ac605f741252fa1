#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "scar/dataset.hpp"
#include "scar/metrics.hpp"
#include "scar/model.hpp"
#include "scar/rng.hpp"

namespace scar {

enum class LossReduction { Mean, Sum };
enum class Precision { Float32, Float64 };

struct TrainConfig {
  std::string manifest;
  std::string data_root;
  std::string out_dir;
  std::string variant = "SCAR";
  std::string fusion = "concat";
  double lr_initial = 1e-5;
  double lr_decay = 0.995;
  int batch_size = 4;
  int epochs = 400;
  int input_height = 576;
  int input_width = 768;
  double sigma = 4.0;
  std::uint64_t seed = 0;
  std::string loss_reduction = "mean";
  double gt_scale = 1.0;
  std::string precision = "float32";
  int checkpoint_every = 50;
  int conv3_channels = 256;
  int attention_channels = 64;
  int sam_reduction = 1;
  std::string init = "gaussian";
  std::string pretrained;

  static TrainConfig from_file(const std::filesystem::path& path);
  void apply(const std::string& key, const std::string& value);
  void validate() const;
  ModelConfig model_config() const;
  LossReduction reduction() const;
  Precision precision_kind() const;

  // key -> help text, in declaration order; every key is a config-file
  // key and a CLI override.
  static const std::vector<std::pair<std::string, std::string>>& keys();
};

double lr_at(const TrainConfig& config, int epoch);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double wall_s = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::string final_checkpoint;
};

std::string format_train_log(const TrainLog& log);

// Standard Adam with default moments.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Param<T>*> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i]->value.numel(), 0.0);
      v_[i].assign(params_[i]->value.numel(), 0.0);
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param<T>* p = params_[i];
      for (std::size_t k = 0; k < p->value.data.size(); ++k) {
        const double g = static_cast<double>(p->grad.data[k]);
        m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g;
        v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g * g;
        const double mhat = m_[i][k] / bc1;
        const double vhat = v_[i][k] / bc2;
        p->value.data[k] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  std::int64_t steps() const { return t_; }

 private:
  std::vector<Param<T>*> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

// Pixel loss between a forward output and its target, both {1, H, W}.
// Returns the per-item loss and writes d(loss)/d(pred) scaled by
// 1/batch_items into grad.
template <typename T>
double mse_loss_grad(const Tensor<T>& pred, const Tensor<T>& target, LossReduction reduction,
                     int batch_items, Tensor<T>& grad) {
  if (!pred.same_shape(target)) throw ValidationError("loss: prediction/target shapes differ");
  grad = Tensor<T>(pred.shape);
  const double denom = reduction == LossReduction::Mean ? static_cast<double>(pred.numel()) : 1.0;
  double loss = 0.0;
  const double gscale = 2.0 / (denom * batch_items);
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
    loss += d * d;
    grad.data[i] = static_cast<T>(d * gscale);
  }
  return loss / denom;
}

struct PreparedScene {
  std::string scene_id;
  Image image;               // resized to the training resolution
  DensityMap gt;             // generated from the scaled points
};

template <typename T>
struct TrainedModel {
  ScarNet<T> model;
  TrainLog log;
};

// One full pass over split.train per epoch, last partial batch kept.
// Deterministic given config.seed: init, data order and arithmetic all
// derive from it.
template <typename T>
TrainedModel<T> train_impl(const TrainConfig& cfg, const DatasetSplit& split) {
  cfg.validate();
  if (split.train.empty()) throw ValidationError("training set is empty");
  ScarNet<T> net(cfg.model_config(), cfg.seed);
  if (!cfg.pretrained.empty()) load_pretrained(net, cfg.pretrained);
  net.set_training(true);

  const int n = static_cast<int>(split.train.size());
  std::vector<Tensor<T>> inputs(n), targets(n);
  for (int i = 0; i < n; ++i) {
    const AnnotatedScene scaled = resize_scene(split.train[i], cfg.input_height, cfg.input_width);
    inputs[i] = net.normalize_image(scaled.image);
    const DensityMap gt =
        generate_density_map(scaled.head_points, cfg.input_height, cfg.input_width, cfg.sigma);
    Tensor<T> t({1, cfg.input_height, cfg.input_width});
    for (std::size_t k = 0; k < gt.values.size(); ++k)
      t.data[k] = static_cast<T>(gt.values[k] * cfg.gt_scale);
    targets[i] = std::move(t);
  }

  Adam<T> opt(net.params());
  TrainLog log;
  double best_loss = std::numeric_limits<double>::infinity();
  const bool persist = !cfg.out_dir.empty();
  if (persist) std::filesystem::create_directories(cfg.out_dir);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Tensor<T> grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_at(cfg, epoch);
    Rng shuffle_rng = Rng::for_epoch(cfg.seed, epoch);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      const int items = end - start;
      net.zero_grad();
      double batch_loss = 0.0;
      for (int k = start; k < end; ++k) {
        const int idx = order[k];
        Tensor<T> out = net.forward(inputs[idx]);
        batch_loss +=
            mse_loss_grad(out, targets[idx], cfg.reduction(), items, grad) / items;
        net.backward(grad);
      }
      if (!std::isfinite(batch_loss))
        throw NumericsError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches));
      opt.step(lr);
      loss_sum += batch_loss;
      ++batches;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double mean_loss = batches ? loss_sum / batches : 0.0;
    log.epochs.push_back({epoch, lr, mean_loss, wall});

    if (persist) {
      if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)
        save_checkpoint(net, std::filesystem::path(cfg.out_dir) /
                                 ("checkpoint_epoch" + std::to_string(epoch + 1)));
      if (mean_loss < best_loss) {
        best_loss = mean_loss;
        save_checkpoint(net, std::filesystem::path(cfg.out_dir) / "checkpoint_best");
      }
    }
  }
  if (persist) {
    const auto final_dir = std::filesystem::path(cfg.out_dir) / "checkpoint_final";
    save_checkpoint(net, final_dir);
    log.final_checkpoint = final_dir.string();
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "train_log.txt", std::ios::binary);
    out << format_train_log(log);
  }
  net.set_training(false);
  return {std::move(net), std::move(log)};
}

struct TrainResult {
  std::variant<ScarNet<float>, ScarNet<double>> model;
  TrainLog log;

  MetricsReport evaluate_on(const std::vector<AnnotatedScene>& scenes, const EvalOptions& options) {
    if (auto* f = std::get_if<ScarNet<float>>(&model)) return evaluate_model(*f, scenes, options);
    return evaluate_model(std::get<ScarNet<double>>(model), scenes, options);
  }
};

// Dispatches on config.precision.
TrainResult train(const TrainConfig& config, const DatasetSplit& split);

struct AblationRow {
  std::string method;
  MetricsReport report;
  double final_train_loss = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // FCN, FCN+SAM, FCN+CAM, SCAR
};

// Trains and evaluates all four variants under the same seed and data
// order (the shuffle depends only on seed and epoch).
AblationResult run_ablation(const TrainConfig& base_config, const DatasetSplit& split);

std::string format_ablation_table(const AblationResult& result);

}  // namespace scar
