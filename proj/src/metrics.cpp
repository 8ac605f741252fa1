#include "scar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "scar/errors.hpp"

namespace scar {

namespace {

void check_counts(const std::vector<double>& gt, const std::vector<double>& pred) {
  if (gt.empty()) throw ValidationError("count metrics need at least one image");
  if (gt.size() != pred.size()) throw ValidationError("count list lengths differ");
}

void check_same_shape(const DensityMap& a, const DensityMap& b) {
  if (a.h != b.h || a.w != b.w) throw ValidationError("density map shapes differ");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double mae(const std::vector<double>& gt_counts, const std::vector<double>& pred_counts) {
  check_counts(gt_counts, pred_counts);
  double s = 0.0;
  for (std::size_t i = 0; i < gt_counts.size(); ++i) s += std::abs(gt_counts[i] - pred_counts[i]);
  return s / static_cast<double>(gt_counts.size());
}

double mse_count(const std::vector<double>& gt_counts, const std::vector<double>& pred_counts) {
  check_counts(gt_counts, pred_counts);
  double s = 0.0;
  for (std::size_t i = 0; i < gt_counts.size(); ++i) {
    const double d = gt_counts[i] - pred_counts[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(gt_counts.size()));
}

double mse_loss(const DensityMap& pred, const DensityMap& gt) {
  check_same_shape(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double d = pred.values[i] - gt.values[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.values.size());
}

double psnr(const DensityMap& pred, const DensityMap& gt, double cap_db) {
  check_same_shape(pred, gt);
  const double peak = *std::max_element(gt.values.begin(), gt.values.end());
  if (peak <= 0.0)
    throw ValidationError("psnr: ground truth map is all zero; skip this image");
  const double inv_peak = 1.0 / peak;
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double d = (pred.values[i] - gt.values[i]) * inv_peak;
    mse += d * d;
  }
  mse /= static_cast<double>(pred.values.size());
  if (mse <= 0.0) return cap_db;
  return std::min(cap_db, 10.0 * std::log10(1.0 / mse));
}

double ssim(const DensityMap& pred, const DensityMap& gt) {
  check_same_shape(pred, gt);
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;  // (0.01 L)^2, L = 1 after normalization
  constexpr double kC2 = 0.03 * 0.03;
  if (pred.h < kWindow || pred.w < kWindow)
    throw ValidationError("ssim needs maps of at least 11x11");

  const double peak = *std::max_element(gt.values.begin(), gt.values.end());
  const double inv_peak = peak > 0.0 ? 1.0 / peak : 1.0;

  double window[kWindow];
  double wsum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    window[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    wsum += window[i];
  }
  for (double& w : window) w /= wsum;

  const int h = pred.h, w = pred.w;
  const int vh = h - kWindow + 1, vw = w - kWindow + 1;  // valid region
  // Separable Gaussian filtering of x, y, x^2, y^2, xy.
  auto filter = [&](const std::vector<double>& src) {
    std::vector<double> tmp(static_cast<std::size_t>(h) * vw, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < vw; ++x) {
        double s = 0.0;
        for (int k = 0; k < kWindow; ++k) s += window[k] * src[static_cast<std::size_t>(y) * w + x + k];
        tmp[static_cast<std::size_t>(y) * vw + x] = s;
      }
    std::vector<double> out(static_cast<std::size_t>(vh) * vw, 0.0);
    for (int y = 0; y < vh; ++y)
      for (int x = 0; x < vw; ++x) {
        double s = 0.0;
        for (int k = 0; k < kWindow; ++k) s += window[k] * tmp[static_cast<std::size_t>(y + k) * vw + x];
        out[static_cast<std::size_t>(y) * vw + x] = s;
      }
    return out;
  };

  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> xs(n), ys(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = pred.values[i] * inv_peak;
    const double b = gt.values[i] * inv_peak;
    xs[i] = a;
    ys[i] = b;
    xx[i] = a * a;
    yy[i] = b * b;
    xy[i] = a * b;
  }
  const auto mu_x = filter(xs), mu_y = filter(ys);
  const auto sxx = filter(xx), syy = filter(yy), sxy = filter(xy);

  double total = 0.0;
  const std::size_t m = mu_x.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double mx = mu_x[i], my = mu_y[i];
    const double vx = sxx[i] - mx * mx;
    const double vy = syy[i] - my * my;
    const double cov = sxy[i] - mx * my;
    total += ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
             ((mx * mx + my * my + kC1) * (vx + vy + kC2));
  }
  return total / static_cast<double>(m);
}

MetricsReport evaluate(const Predictor& predictor, const std::vector<AnnotatedScene>& scenes,
                       const EvalOptions& options) {
  if (scenes.empty()) throw ValidationError("evaluate: no test scenes");
  MetricsReport report;
  std::vector<double> gt_counts, pred_counts;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  int quality_images = 0;
  for (const auto& scene : scenes) {
    const AnnotatedScene scaled = resize_scene(scene, options.input_h, options.input_w);
    const PredictionResult pred = predictor(scaled.image);
    const double gt_count = static_cast<double>(scaled.head_points.size());
    gt_counts.push_back(gt_count);
    pred_counts.push_back(pred.count);
    report.per_image.push_back({scene.scene_id, gt_count, pred.count});
    const DensityMap gt_map =
        generate_density_map(scaled.head_points, options.input_h, options.input_w, options.sigma);
    if (gt_map.sum() > 0.0) {
      psnr_sum += psnr(pred.density, gt_map, options.psnr_cap_db);
      ssim_sum += ssim(pred.density, gt_map);
      ++quality_images;
    }
  }
  report.mae = mae(gt_counts, pred_counts);
  report.mse = mse_count(gt_counts, pred_counts);
  report.psnr = quality_images ? psnr_sum / quality_images : std::nan("");
  report.ssim = quality_images ? ssim_sum / quality_images : std::nan("");
  report.n_images = static_cast<int>(scenes.size());
  return report;
}

std::string format_report(const MetricsReport& report) {
  std::string out;
  out += "mae = " + fmt(report.mae) + "\n";
  out += "mse = " + fmt(report.mse) + "\n";
  out += "psnr = " + fmt(report.psnr) + "\n";
  out += "ssim = " + fmt(report.ssim) + "\n";
  out += "n_images = " + std::to_string(report.n_images) + "\n";
  out += "normalization = per-image gt-max\n";
  out += "\n";
  for (const auto& r : report.per_image)
    out += r.scene_id + "\t" + fmt(r.gt_count) + "\t" + fmt(r.pred_count) + "\n";
  return out;
}

void write_report(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write report: " + path.string());
  out << format_report(report);
}

}  // namespace scar
