#include "scar/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scar/errors.hpp"
#include "scar/image_io.hpp"
#include "scar/rng.hpp"

namespace scar {

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<HeadPoint> parse_points(const std::string& field, const std::string& context) {
  std::vector<HeadPoint> pts;
  if (field == "-" || field.empty()) return pts;
  for (const auto& pair : split_fields(field, ';')) {
    if (pair.empty()) continue;
    auto xy = split_fields(pair, ',');
    if (xy.size() != 2) throw ValidationError("bad point '" + pair + "' in " + context);
    try {
      pts.push_back({std::stod(xy[0]), std::stod(xy[1])});
    } catch (const std::exception&) {
      throw ValidationError("bad point '" + pair + "' in " + context);
    }
  }
  return pts;
}

std::string scene_id_from_path(const std::string& image_path) {
  return std::filesystem::path(image_path).stem().string();
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw LoadError("cannot open manifest: " + manifest.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3)
      throw ValidationError("manifest line " + std::to_string(lineno) + ": expected 3 tab-separated fields");
    if (fields[0] != "train" && fields[0] != "test")
      throw ValidationError("manifest line " + std::to_string(lineno) + ": split must be train or test");
    ManifestEntry e;
    e.split = fields[0];
    e.image_path = fields[1];
    e.head_points = parse_points(fields[2], "manifest line " + std::to_string(lineno));
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw LoadError("cannot write manifest: " + manifest.string());
  for (const auto& e : entries) {
    out << e.split << '\t' << e.image_path << '\t';
    if (e.head_points.empty()) {
      out << '-';
    } else {
      char buf[64];
      for (std::size_t i = 0; i < e.head_points.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f", e.head_points[i].x, e.head_points[i].y);
        if (i) out << ';';
        out << buf;
      }
    }
    out << '\n';
  }
}

DatasetSplit load_annotations(const std::filesystem::path& root, const std::filesystem::path& manifest) {
  DatasetSplit split;
  for (const auto& entry : parse_manifest(manifest)) {
    AnnotatedScene scene;
    scene.scene_id = scene_id_from_path(entry.image_path);
    const auto path = root / entry.image_path;
    if (!std::filesystem::exists(path))
      throw LoadError("scene " + scene.scene_id + ": missing image file " + path.string());
    scene.image = load_image(path);
    for (std::size_t i = 0; i < entry.head_points.size(); ++i) {
      const auto& p = entry.head_points[i];
      if (p.x < 0.0 || p.x >= scene.image.w || p.y < 0.0 || p.y >= scene.image.h)
        throw ValidationError("scene " + scene.scene_id + ": head point " + std::to_string(i) +
                              " outside image bounds");
    }
    scene.head_points = entry.head_points;
    (entry.split == "train" ? split.train : split.test).push_back(std::move(scene));
  }
  return split;
}

Image resize_image(const Image& src, int target_h, int target_w) {
  if (target_h <= 0 || target_w <= 0) throw ValidationError("resize target must be positive");
  if (target_h == src.h && target_w == src.w) return src;
  Image dst(target_h, target_w);
  const double sy = static_cast<double>(src.h) / target_h;
  const double sx = static_cast<double>(src.w) / target_w;
  for (int y = 0; y < target_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double ty = fy - y0;
    if (y0 < 0) {
      y0 = 0;
      ty = 0.0;
    }
    int y1 = std::min(y0 + 1, src.h - 1);
    if (y0 >= src.h - 1) {
      y0 = src.h - 1;
      y1 = y0;
      ty = 0.0;
    }
    for (int x = 0; x < target_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double tx = fx - x0;
      if (x0 < 0) {
        x0 = 0;
        tx = 0.0;
      }
      int x1 = std::min(x0 + 1, src.w - 1);
      if (x0 >= src.w - 1) {
        x0 = src.w - 1;
        x1 = x0;
        tx = 0.0;
      }
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(y0, x0, c) * (1.0 - tx) + src.at(y0, x1, c) * tx;
        const double bot = src.at(y1, x0, c) * (1.0 - tx) + src.at(y1, x1, c) * tx;
        const double v = top * (1.0 - ty) + bot * ty;
        dst.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return dst;
}

AnnotatedScene resize_scene(const AnnotatedScene& scene, int target_h, int target_w) {
  AnnotatedScene out;
  out.scene_id = scene.scene_id;
  out.image = resize_image(scene.image, target_h, target_w);
  const double rx = static_cast<double>(target_w) / scene.image.w;
  const double ry = static_cast<double>(target_h) / scene.image.h;
  out.head_points.reserve(scene.head_points.size());
  for (const auto& p : scene.head_points) out.head_points.push_back({p.x * rx, p.y * ry});
  return out;
}

AnnotatedScene synth_scene(int n_heads, int h, int w, std::uint64_t seed, bool density_gradient) {
  if (h < 8 || w < 8) throw ValidationError("synthetic scenes need at least 8x8 pixels");
  Rng rng(seed);
  AnnotatedScene scene;
  scene.image = Image(h, w);

  // Smooth value-noise background with per-pixel grain.
  const int cell = 16;
  const int gh = h / cell + 2, gw = w / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gh) * gw);
  for (auto& g : grid) g = rng.uniform(90.0, 200.0);
  for (int y = 0; y < h; ++y) {
    const double gy = static_cast<double>(y) / cell;
    const int iy = static_cast<int>(gy);
    const double ty = gy - iy;
    for (int x = 0; x < w; ++x) {
      const double gx = static_cast<double>(x) / cell;
      const int ix = static_cast<int>(gx);
      const double tx = gx - ix;
      const double v00 = grid[static_cast<std::size_t>(iy) * gw + ix];
      const double v01 = grid[static_cast<std::size_t>(iy) * gw + ix + 1];
      const double v10 = grid[static_cast<std::size_t>(iy + 1) * gw + ix];
      const double v11 = grid[static_cast<std::size_t>(iy + 1) * gw + ix + 1];
      double v = (v00 * (1 - tx) + v01 * tx) * (1 - ty) + (v10 * (1 - tx) + v11 * tx) * ty;
      v += rng.uniform(-12.0, 12.0);
      const auto b = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      scene.image.at(y, x, 0) = b;
      scene.image.at(y, x, 1) = b;
      scene.image.at(y, x, 2) = b;
    }
  }

  // Heads: dark disks. The margin keeps every disk fully inside.
  const double margin = 3.0;
  for (int i = 0; i < n_heads; ++i) {
    double ux = rng.uniform();
    if (density_gradient) ux = std::sqrt(ux);  // linear density ramp along x
    const double px = margin + ux * (w - 1 - 2 * margin);
    const double py = margin + rng.uniform() * (h - 1 - 2 * margin);
    const double radius = rng.uniform(1.8, 2.8);
    const int shade = rng.uniform_int(10, 60);
    const int x0 = std::max(0, static_cast<int>(px - radius - 1));
    const int x1 = std::min(w - 1, static_cast<int>(px + radius + 1));
    const int y0 = std::max(0, static_cast<int>(py - radius - 1));
    const int y1 = std::min(h - 1, static_cast<int>(py + radius + 1));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = std::hypot(x - px, y - py);
        if (d <= radius) {
          for (int c = 0; c < 3; ++c) scene.image.at(y, x, c) = static_cast<std::uint8_t>(shade);
        } else if (d <= radius + 1.0) {
          const double t = d - radius;
          for (int c = 0; c < 3; ++c) {
            const double v = shade * (1 - t) + scene.image.at(y, x, c) * t;
            scene.image.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
          }
        }
      }
    }
    scene.head_points.push_back({px, py});
  }
  return scene;
}

}  // namespace scar
