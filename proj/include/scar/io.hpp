#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scar/density.hpp"
#include "scar/tensor.hpp"

namespace scar {

// --- density map file: magic "SCARDMP1", u32 H, u32 W, f32 row-major ---
void write_density_map(const std::filesystem::path& path, const DensityMap& map);
DensityMap read_density_map(const std::filesystem::path& path);

// Any 2-D float grid (attention matrices reuse the density format).
void write_grid(const std::filesystem::path& path, int h, int w, const std::vector<float>& values);

// --- weight directory: one "SCARWGT1" tensor file per layer + layers.txt ---
struct WeightFile {
  std::vector<std::string> order;                // layer order from the manifest
  std::map<std::string, Tensor<float>> tensors;  // name -> row-major f32 tensor
};

void save_weight_dir(const std::filesystem::path& dir,
                     const std::vector<std::pair<std::string, Tensor<float>>>& tensors);
WeightFile load_weight_dir(const std::filesystem::path& dir);

// --- plain-text "key = value" config files, '#' comments ---
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::filesystem::path& path);
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

// key=value metadata lines (checkpoint meta.txt).
void write_kv_file(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& kv);
std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path);

}  // namespace scar
