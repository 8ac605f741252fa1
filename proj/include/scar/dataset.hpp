#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scar/density.hpp"

namespace scar {

// 8-bit RGB raster, row-major H x W x 3.
struct Image {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int height, int width)
      : h(height), w(width), rgb(static_cast<std::size_t>(height) * width * 3, 0) {}

  std::uint8_t& at(int y, int x, int c) {
    return rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c];
  }
};

// An RGB crowd scene plus its head-point annotations.
struct AnnotatedScene {
  std::string scene_id;
  Image image;
  std::vector<HeadPoint> head_points;
};

struct DatasetSplit {
  std::vector<AnnotatedScene> train;
  std::vector<AnnotatedScene> test;
};

// One manifest record: split, image path relative to the dataset root,
// semicolon-separated x,y pairs ("-" when the scene is empty).
struct ManifestEntry {
  std::string split;
  std::string image_path;
  std::vector<HeadPoint> head_points;
};

std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);

// Loads every referenced image and validates head points against its
// bounds. scene_id is the image filename without extension.
DatasetSplit load_annotations(const std::filesystem::path& root, const std::filesystem::path& manifest);

// Bilinear image resample; head points scale linearly with the resize
// ratio. Density maps are generated from the scaled points afterwards,
// never by resampling a grid.
Image resize_image(const Image& src, int target_h, int target_w);
AnnotatedScene resize_scene(const AnnotatedScene& scene, int target_h, int target_w);

// Deterministic synthetic crowd scene: textured background with one dark
// disk per head. With density_gradient set, the point density grows from
// left to right.
AnnotatedScene synth_scene(int n_heads, int h, int w, std::uint64_t seed, bool density_gradient);

}  // namespace scar
