#pragma once

#include <vector>

namespace scar {

struct HeadPoint {
  double x = 0.0;
  double y = 0.0;
};

// Non-negative H x W grid in persons per pixel; the integral of a
// ground-truth map equals the head count.
struct DensityMap {
  int h = 0;
  int w = 0;
  std::vector<double> values;

  DensityMap() = default;
  DensityMap(int height, int width) : h(height), w(width), values(static_cast<std::size_t>(height) * width, 0.0) {}

  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
  double sum() const;
};

// Place one isotropic Gaussian of bandwidth sigma per head point,
// truncated at +/- 4 sigma and renormalized per head so each
// contributes exactly unit mass after border clipping. Centers keep
// their sub-pixel coordinates.
DensityMap generate_density_map(const std::vector<HeadPoint>& points, int h, int w, double sigma);

}  // namespace scar
