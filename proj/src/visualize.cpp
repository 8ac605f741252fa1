#include "scar/visualize.hpp"

#include <algorithm>
#include <cmath>

namespace scar {

std::vector<std::uint8_t> grid_to_gray(const std::vector<double>& values) {
  std::vector<std::uint8_t> out(values.size(), 128);
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) return out;  // constant grid -> mid-gray
  const double scale = 255.0 / (hi - lo);
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::lround((values[i] - lo) * scale));
  return out;
}

namespace {

// Viridis anchor colors at t = 0, 1/8, ..., 1.
constexpr std::uint8_t kRamp[9][3] = {
    {68, 1, 84},    {71, 44, 122},  {59, 81, 139}, {44, 113, 142}, {33, 144, 141},
    {39, 173, 129}, {92, 200, 99},  {170, 220, 50}, {253, 231, 37},
};

void ramp_color(double t, std::uint8_t rgb[3]) {
  t = std::clamp(t, 0.0, 1.0) * 8.0;
  const int i = std::min(7, static_cast<int>(t));
  const double f = t - i;
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<std::uint8_t>(std::lround(kRamp[i][c] * (1.0 - f) + kRamp[i + 1][c] * f));
}

}  // namespace

void save_density_colormap(const std::filesystem::path& path, const DensityMap& map) {
  const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double span = hi > lo ? hi - lo : 1.0;
  Image img(map.h, map.w);
  for (int y = 0; y < map.h; ++y)
    for (int x = 0; x < map.w; ++x) {
      std::uint8_t rgb[3];
      ramp_color((map.at(y, x) - lo) / span, rgb);
      img.at(y, x, 0) = rgb[0];
      img.at(y, x, 1) = rgb[1];
      img.at(y, x, 2) = rgb[2];
    }
  save_image(path, img);
}

}  // namespace scar
