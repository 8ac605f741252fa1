#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scar/dataset.hpp"
#include "scar/density.hpp"
#include "scar/model.hpp"

namespace scar {

// Mean absolute error over per-image counts.
double mae(const std::vector<double>& gt_counts, const std::vector<double>& pred_counts);

// Root-mean-square error over per-image counts (the counting "MSE").
double mse_count(const std::vector<double>& gt_counts, const std::vector<double>& pred_counts);

// Mean squared error between two maps of equal shape (pixel mean).
double mse_loss(const DensityMap& pred, const DensityMap& gt);

// Both maps are scaled by 1/max(gt) into a nominal [0,1] range first;
// identical maps hit the cap. An all-zero gt is an error - skip the image.
double psnr(const DensityMap& pred, const DensityMap& gt, double cap_db = 100.0);

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), C1=(0.01L)^2,
// C2=(0.03L)^2 with L=1 after the same gt-max normalization as psnr.
double ssim(const DensityMap& pred, const DensityMap& gt);

struct PerImageResult {
  std::string scene_id;
  double gt_count = 0.0;
  double pred_count = 0.0;
};

struct MetricsReport {
  double mae = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  int n_images = 0;
  std::vector<PerImageResult> per_image;
};

struct EvalOptions {
  int input_h = 576;
  int input_w = 768;
  double sigma = 4.0;
  double psnr_cap_db = 100.0;
};

using Predictor = std::function<PredictionResult(const Image&)>;

// Runs the predictor over every test scene at the evaluation resolution;
// ground-truth maps are generated from the scaled points at that same
// size. Images with an all-zero GT map are skipped for PSNR/SSIM but
// still count toward MAE/MSE.
MetricsReport evaluate(const Predictor& predictor, const std::vector<AnnotatedScene>& scenes,
                       const EvalOptions& options);

template <typename T>
MetricsReport evaluate_model(ScarNet<T>& net, const std::vector<AnnotatedScene>& scenes,
                             const EvalOptions& options) {
  return evaluate([&net](const Image& img) { return net.predict(img); }, scenes, options);
}

std::string format_report(const MetricsReport& report);
void write_report(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace scar
