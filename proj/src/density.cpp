#include "scar/density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scar/errors.hpp"

namespace scar {

double DensityMap::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

DensityMap generate_density_map(const std::vector<HeadPoint>& points, int h, int w, double sigma) {
  if (h <= 0 || w <= 0) throw ValidationError("density map shape must be positive");
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  DensityMap map(h, w);
  const double radius = 4.0 * sigma;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> weights;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const auto& p = points[pi];
    if (p.x < 0.0 || p.x >= w || p.y < 0.0 || p.y >= h)
      throw ValidationError("head point " + std::to_string(pi) + " outside map bounds");
    const int x0 = std::max(0, static_cast<int>(std::ceil(p.x - radius)));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor(p.x + radius)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(p.y - radius)));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor(p.y + radius)));
    if (x1 < x0 || y1 < y0) {
      // Kernel narrower than one pixel: dump the whole head on the nearest cell.
      const int nx = std::clamp(static_cast<int>(std::lround(p.x)), 0, w - 1);
      const int ny = std::clamp(static_cast<int>(std::lround(p.y)), 0, h - 1);
      map.at(ny, nx) += 1.0;
      continue;
    }
    weights.assign(static_cast<std::size_t>(y1 - y0 + 1) * (x1 - x0 + 1), 0.0);
    double mass = 0.0;
    std::size_t k = 0;
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - p.y;
      for (int x = x0; x <= x1; ++x, ++k) {
        const double dx = x - p.x;
        const double v = std::exp(-(dx * dx + dy * dy) * inv2s2);
        weights[k] = v;
        mass += v;
      }
    }
    const double inv_mass = 1.0 / mass;
    k = 0;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x, ++k) map.at(y, x) += weights[k] * inv_mass;
  }
  return map;
}

}  // namespace scar
