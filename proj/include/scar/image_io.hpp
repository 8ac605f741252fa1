#pragma once

#include <filesystem>

#include "scar/dataset.hpp"

namespace scar {

Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& img);

// 8-bit single-channel raster (attention map exports).
void save_gray_image(const std::filesystem::path& path, int h, int w,
                     const std::vector<std::uint8_t>& pixels);

}  // namespace scar
