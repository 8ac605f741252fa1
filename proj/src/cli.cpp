#include "scar/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scar/dataset.hpp"
#include "scar/errors.hpp"
#include "scar/image_io.hpp"
#include "scar/io.hpp"
#include "scar/metrics.hpp"
#include "scar/model.hpp"
#include "scar/train.hpp"
#include "scar/visualize.hpp"

namespace scar {

namespace {

struct SynthArgs {
  std::string out_dir;
  int n_scenes = 20;
  int heads_min = 5;
  int heads_max = 30;
  int height = 96;
  int width = 128;
  std::uint64_t seed = 0;
  bool gradient = false;
};

int do_synth(const SynthArgs& a) {
  if (a.n_scenes <= 0) throw ConfigError("n-scenes must be positive");
  if (a.heads_min < 0 || a.heads_max < a.heads_min)
    throw ConfigError("heads range must satisfy 0 <= min <= max");
  std::filesystem::create_directories(a.out_dir);
  Rng rng(a.seed);
  std::vector<ManifestEntry> entries;
  const int n_train = a.n_scenes * 4 / 5;  // 80/20 split
  for (int i = 0; i < a.n_scenes; ++i) {
    const int heads = rng.uniform_int(a.heads_min, a.heads_max);
    const std::uint64_t scene_seed = rng.next_u64();
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d.png", i);
    AnnotatedScene scene = synth_scene(heads, a.height, a.width, scene_seed, a.gradient);
    save_image(std::filesystem::path(a.out_dir) / name, scene.image);
    ManifestEntry e;
    e.split = i < n_train ? "train" : "test";
    e.image_path = name;
    e.head_points = scene.head_points;
    entries.push_back(std::move(e));
  }
  write_manifest(std::filesystem::path(a.out_dir) / "manifest.txt", entries);
  std::cout << "wrote " << a.n_scenes << " scenes (" << n_train << " train, "
            << a.n_scenes - n_train << " test) to " << a.out_dir << "\n";
  return 0;
}

struct GtArgs {
  std::string manifest;
  std::string data_root;
  std::string out_dir;
  double sigma = 4.0;
  int height = 0;  // 0 = native resolution
  int width = 0;
};

int do_gt(const GtArgs& a) {
  if (!(a.sigma > 0)) throw ConfigError("sigma must be positive");
  if ((a.height == 0) != (a.width == 0))
    throw ConfigError("give both --height and --width or neither");
  std::filesystem::create_directories(a.out_dir);
  const DatasetSplit split = load_annotations(a.data_root, a.manifest);
  int n = 0;
  for (const auto* scenes : {&split.train, &split.test}) {
    for (const auto& scene : *scenes) {
      const AnnotatedScene* use = &scene;
      AnnotatedScene scaled;
      if (a.height > 0) {
        scaled = resize_scene(scene, a.height, a.width);
        use = &scaled;
      }
      const DensityMap map =
          generate_density_map(use->head_points, use->image.h, use->image.w, a.sigma);
      write_density_map(std::filesystem::path(a.out_dir) / (scene.scene_id + ".dmp"), map);
      ++n;
    }
  }
  std::cout << "wrote " << n << " density maps to " << a.out_dir << "\n";
  return 0;
}

struct ConfigArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // in CLI order

  TrainConfig build() const {
    TrainConfig cfg;
    if (!config_path.empty())
      cfg = TrainConfig::from_file(config_path);
    for (const auto& [k, v] : overrides) cfg.apply(k, v);
    cfg.validate();
    return cfg;
  }
};

int do_train(const ConfigArgs& a) {
  const TrainConfig cfg = a.build();
  if (cfg.manifest.empty()) throw ConfigError("config needs a manifest");
  const DatasetSplit split = load_annotations(cfg.data_root, cfg.manifest);
  const TrainResult result = train(cfg, split);
  if (!result.log.epochs.empty())
    std::cout << "final epoch loss " << result.log.epochs.back().mean_loss << "\n";
  if (!result.log.final_checkpoint.empty())
    std::cout << "checkpoint: " << result.log.final_checkpoint << "\n";
  return 0;
}

int do_ablate(const ConfigArgs& a) {
  const TrainConfig cfg = a.build();
  if (cfg.manifest.empty()) throw ConfigError("config needs a manifest");
  const DatasetSplit split = load_annotations(cfg.data_root, cfg.manifest);
  const AblationResult result = run_ablation(cfg, split);
  const std::string table = format_ablation_table(result);
  std::cout << table;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "ablation.txt", std::ios::binary);
    out << table;
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  std::string data_root;
  std::string out_path;
  int height = 576;
  int width = 768;
  double sigma = 4.0;
};

int do_eval(const EvalArgs& a) {
  ScarNet<float> net = load_checkpoint<float>(a.checkpoint);
  const DatasetSplit split = load_annotations(a.data_root, a.manifest);
  if (split.test.empty()) throw ValidationError("manifest has no test scenes");
  const MetricsReport report =
      evaluate_model(net, split.test, {a.height, a.width, a.sigma});
  const std::string text = format_report(report);
  std::cout << text;
  if (!a.out_path.empty()) write_report(a.out_path, report);
  return 0;
}

struct VisualizeArgs {
  std::string checkpoint;
  std::string image_path;
  std::string out_dir;
  std::string channels = "0,1";
};

int do_visualize(const VisualizeArgs& a) {
  ScarNet<float> net = load_checkpoint<float>(a.checkpoint);
  Image img = load_image(a.image_path);
  if (img.h % 8 || img.w % 8) {
    // round down to the nearest multiple of 8
    img = resize_image(img, img.h - img.h % 8, img.w - img.w % 8);
  }
  std::vector<int> channels;
  std::stringstream ss(a.channels);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) channels.push_back(std::stoi(tok));
  const std::string scene_id = std::filesystem::path(a.image_path).stem().string();
  const auto files = export_attention_maps(net, img, scene_id, a.out_dir, channels);
  for (const auto& f : files) std::cout << f.string() << "\n";
  return 0;
}

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "plain-text key = value config file");
  for (const auto& [key, help] : TrainConfig::keys()) {
    cmd->add_option_function<std::string>(
        "--" + key, [&args, key = key](const std::string& v) { args.overrides.emplace_back(key, v); },
        help);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"SCAR crowd-density regression toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with an 80/20 split");
  synth->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth->add_option("--n-scenes", synth_args.n_scenes, "number of scenes");
  synth->add_option("--heads-min", synth_args.heads_min, "minimum heads per scene");
  synth->add_option("--heads-max", synth_args.heads_max, "maximum heads per scene");
  synth->add_option("--height", synth_args.height, "scene height in pixels");
  synth->add_option("--width", synth_args.width, "scene width in pixels");
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_flag("--gradient", synth_args.gradient, "left-to-right density gradient");
  synth->callback([&] { exit_code = do_synth(synth_args); });

  GtArgs gt_args;
  auto* gt = app.add_subcommand("gt", "Generate ground-truth density maps from a manifest");
  gt->add_option("--manifest", gt_args.manifest, "manifest file")->required();
  gt->add_option("--root", gt_args.data_root, "dataset root directory");
  gt->add_option("--out", gt_args.out_dir, "output directory")->required();
  gt->add_option("--sigma", gt_args.sigma, "Gaussian bandwidth in pixels");
  gt->add_option("--height", gt_args.height, "resize scenes to this height first");
  gt->add_option("--width", gt_args.width, "resize scenes to this width first");
  gt->callback([&] { exit_code = do_gt(gt_args); });

  ConfigArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model variant");
  add_config_options(train_cmd, train_args);
  train_cmd->callback([&] { exit_code = do_train(train_args); });

  ConfigArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate all four variants");
  add_config_options(ablate, ablate_args);
  ablate->callback([&] { exit_code = do_ablate(ablate_args); });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest's test split");
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint directory")->required();
  eval->add_option("--manifest", eval_args.manifest, "manifest file")->required();
  eval->add_option("--root", eval_args.data_root, "dataset root directory");
  eval->add_option("--out", eval_args.out_path, "report output file");
  eval->add_option("--height", eval_args.height, "evaluation height");
  eval->add_option("--width", eval_args.width, "evaluation width");
  eval->add_option("--sigma", eval_args.sigma, "GT Gaussian bandwidth");
  eval->callback([&] { exit_code = do_eval(eval_args); });

  VisualizeArgs vis_args;
  auto* vis = app.add_subcommand("visualize", "Export attention maps and the predicted density");
  vis->add_option("--checkpoint", vis_args.checkpoint, "checkpoint directory")->required();
  vis->add_option("--image", vis_args.image_path, "input image")->required();
  vis->add_option("--out", vis_args.out_dir, "output directory")->required();
  vis->add_option("--channels", vis_args.channels, "comma-separated channel indices");
  vis->callback([&] { exit_code = do_visualize(vis_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("scar");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace scar
