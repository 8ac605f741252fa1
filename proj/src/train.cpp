#include "scar/train.hpp"

#include <fstream>

#include "scar/io.hpp"

namespace scar {

namespace {

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected number, got '" + value + "'");
  }
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& TrainConfig::keys() {
  static const std::vector<std::pair<std::string, std::string>> k = {
      {"manifest", "dataset manifest file"},
      {"data_root", "directory the manifest's image paths are relative to"},
      {"out_dir", "output directory for checkpoints and logs"},
      {"variant", "FCN, FCN+SAM, FCN+CAM or SCAR"},
      {"fusion", "concat or sum (SCAR only)"},
      {"lr_initial", "initial learning rate"},
      {"lr_decay", "per-epoch learning-rate factor"},
      {"batch_size", "images per optimizer step"},
      {"epochs", "training epochs"},
      {"input_height", "training resolution height (divisible by 8)"},
      {"input_width", "training resolution width (divisible by 8)"},
      {"sigma", "ground-truth Gaussian bandwidth in pixels"},
      {"seed", "seed for init and data order"},
      {"loss_reduction", "mean or sum over pixels"},
      {"gt_scale", "constant multiplier on GT maps during training"},
      {"precision", "float32 or float64"},
      {"checkpoint_every", "checkpoint interval in epochs (0 = off)"},
      {"conv3_channels", "third VGG stage width (256, or 128 for the literal table)"},
      {"attention_channels", "channel count entering the attention branches"},
      {"sam_reduction", "channel reduction for the SAM key/query projections"},
      {"init", "gaussian or msra weight init"},
      {"pretrained", "optional weight directory for the backbone"},
  };
  return k;
}

void TrainConfig::apply(const std::string& key, const std::string& value) {
  if (key == "manifest") manifest = value;
  else if (key == "data_root") data_root = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "variant") variant = value;
  else if (key == "fusion") fusion = value;
  else if (key == "lr_initial") lr_initial = parse_double(key, value);
  else if (key == "lr_decay") lr_decay = parse_double(key, value);
  else if (key == "batch_size") batch_size = parse_int(key, value);
  else if (key == "epochs") epochs = parse_int(key, value);
  else if (key == "input_height") input_height = parse_int(key, value);
  else if (key == "input_width") input_width = parse_int(key, value);
  else if (key == "sigma") sigma = parse_double(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "loss_reduction") loss_reduction = value;
  else if (key == "gt_scale") gt_scale = parse_double(key, value);
  else if (key == "precision") precision = value;
  else if (key == "checkpoint_every") checkpoint_every = parse_int(key, value);
  else if (key == "conv3_channels") conv3_channels = parse_int(key, value);
  else if (key == "attention_channels") attention_channels = parse_int(key, value);
  else if (key == "sam_reduction") sam_reduction = parse_int(key, value);
  else if (key == "init") init = value;
  else if (key == "pretrained") pretrained = value;
  else throw ConfigError("unknown config key: " + key);
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  TrainConfig cfg;
  for (const auto& [k, v] : parse_config_file(path)) cfg.apply(k, v);
  return cfg;
}

void TrainConfig::validate() const {
  if (!(lr_initial > 0.0)) throw ConfigError("lr_initial must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must be in (0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (input_height % 8 || input_width % 8 || input_height <= 0 || input_width <= 0)
    throw ConfigError("input size must be positive and divisible by 8");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(gt_scale > 0.0)) throw ConfigError("gt_scale must be positive");
  if (loss_reduction != "mean" && loss_reduction != "sum")
    throw ConfigError("loss_reduction must be mean or sum");
  if (precision != "float32" && precision != "float64")
    throw ConfigError("precision must be float32 or float64");
  if (init != "gaussian" && init != "msra") throw ConfigError("init must be gaussian or msra");
  parse_variant(variant);
  parse_fusion(fusion);
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig mc;
  mc.variant = parse_variant(variant);
  mc.fusion = parse_fusion(fusion);
  mc.conv3_channels = conv3_channels;
  mc.attention_channels = attention_channels;
  mc.sam_reduction = sam_reduction;
  mc.init = init == "msra" ? InitKind::Msra : InitKind::Gaussian001;
  mc.normalization = pretrained.empty() ? ImageNorm::Unit : ImageNorm::ImageNet;
  mc.gt_scale = gt_scale;
  return mc;
}

LossReduction TrainConfig::reduction() const {
  return loss_reduction == "sum" ? LossReduction::Sum : LossReduction::Mean;
}

Precision TrainConfig::precision_kind() const {
  return precision == "float64" ? Precision::Float64 : Precision::Float32;
}

double lr_at(const TrainConfig& config, int epoch) {
  if (epoch < 0) throw ValidationError("epoch must be >= 0");
  return config.lr_initial * std::pow(config.lr_decay, epoch);
}

std::string format_train_log(const TrainLog& log) {
  std::string out;
  for (const auto& e : log.epochs) {
    out += "epoch=" + std::to_string(e.epoch) + "\tlr=" + fmt9(e.lr) +
           "\tloss=" + fmt9(e.mean_loss) + "\twall_s=" + fmt9(e.wall_s) + "\n";
  }
  if (!log.final_checkpoint.empty()) out += "final_checkpoint=" + log.final_checkpoint + "\n";
  return out;
}

TrainResult train(const TrainConfig& config, const DatasetSplit& split) {
  if (config.precision_kind() == Precision::Float64) {
    auto r = train_impl<double>(config, split);
    return {std::move(r.model), std::move(r.log)};
  }
  auto r = train_impl<float>(config, split);
  return {std::move(r.model), std::move(r.log)};
}

AblationResult run_ablation(const TrainConfig& base_config, const DatasetSplit& split) {
  AblationResult result;
  for (const char* name : {"FCN", "FCN+SAM", "FCN+CAM", "SCAR"}) {
    TrainConfig cfg = base_config;
    cfg.variant = name;
    if (!cfg.out_dir.empty()) {
      std::string sub = name;
      for (auto& c : sub)
        if (c == '+') c = '_';
      cfg.out_dir = (std::filesystem::path(base_config.out_dir) / sub).string();
    }
    TrainResult r = train(cfg, split);
    AblationRow row;
    row.method = name;
    row.final_train_loss = r.log.epochs.empty() ? 0.0 : r.log.epochs.back().mean_loss;
    row.report = r.evaluate_on(split.test, {cfg.input_height, cfg.input_width, cfg.sigma});
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string format_ablation_table(const AblationResult& result) {
  std::string out = "Method\tMAE\tMSE\tPSNR\tSSIM\n";
  char buf[160];
  for (const auto& row : result.rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.2f\t%.2f\t%.2f\t%.3f\n", row.method.c_str(),
                  row.report.mae, row.report.mse, row.report.psnr, row.report.ssim);
    out += buf;
  }
  return out;
}

}  // namespace scar
