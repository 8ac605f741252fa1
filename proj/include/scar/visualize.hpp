#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scar/image_io.hpp"
#include "scar/model.hpp"

namespace scar {

// Min-max normalization to 8-bit gray; a constant grid maps to mid-gray.
std::vector<std::uint8_t> grid_to_gray(const std::vector<double>& values);

// Fixed perceptually uniform color ramp (viridis anchor points, linearly
// interpolated) over the min-max-normalized map.
void save_density_colormap(const std::filesystem::path& path, const DensityMap& map);

// Writes the post-attention feature channel of each available branch as
// a grayscale image plus the predicted density map as a color image.
// Filenames: <scene_id>_{sam|cam}_ch<k>.png and <scene_id>_density.png.
template <typename T>
std::vector<std::filesystem::path> export_attention_maps(ScarNet<T>& net, const Image& image,
                                                         const std::string& scene_id,
                                                         const std::filesystem::path& out_dir,
                                                         const std::vector<int>& channels) {
  if (!net.has_sam() && !net.has_cam())
    throw ValidationError("variant " + variant_name(net.config().variant) +
                          " has no attention state");
  const int c_max = net.config().attention_channels;
  for (int ch : channels)
    if (ch < 0 || ch >= c_max)
      throw ValidationError("channel index " + std::to_string(ch) + " out of range (C=" +
                            std::to_string(c_max) + ")");
  std::filesystem::create_directories(out_dir);
  const PredictionResult pred = net.predict(image);

  std::vector<std::filesystem::path> written;
  auto dump_branch = [&](const Tensor<T>& branch, const char* tag) {
    const int h = branch.dim(1), w = branch.dim(2);
    for (int ch : channels) {
      std::vector<double> plane(static_cast<std::size_t>(h) * w);
      const T* src = branch.ptr() + static_cast<std::size_t>(ch) * h * w;
      for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = static_cast<double>(src[i]);
      const auto path =
          out_dir / (scene_id + "_" + tag + "_ch" + std::to_string(ch) + ".png");
      save_gray_image(path, h, w, grid_to_gray(plane));
      written.push_back(path);
    }
  };
  if (net.has_sam()) dump_branch(net.sam().last_output(), "sam");
  if (net.has_cam()) dump_branch(net.cam().last_output(), "cam");

  const auto density_path = out_dir / (scene_id + "_density.png");
  save_density_colormap(density_path, pred.density);
  written.push_back(density_path);
  return written;
}

}  // namespace scar
