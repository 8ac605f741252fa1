#include "scar/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "scar/errors.hpp"

namespace scar {

namespace {

constexpr char kDensityMagic[8] = {'S', 'C', 'A', 'R', 'D', 'M', 'P', '1'};
constexpr char kWeightMagic[8] = {'S', 'C', 'A', 'R', 'W', 'G', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw LoadError("truncated file reading " + what);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f32(std::ostream& out, const float* data, std::size_t n) {
  static_assert(sizeof(float) == 4);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &data[i], 4);
    put_u32(out, bits);
  }
}

void get_f32(std::istream& in, float* data, std::size_t n, const std::string& what) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = get_u32(in, what);
    std::memcpy(&data[i], &bits, 4);
  }
}

void check_magic(std::istream& in, const char (&magic)[8], const std::string& path) {
  char got[8];
  if (!in.read(got, 8) || std::memcmp(got, magic, 8) != 0)
    throw LoadError("bad magic in " + path + " (expected " + std::string(magic, 8) + ")");
}

}  // namespace

void write_grid(const std::filesystem::path& path, int h, int w, const std::vector<float>& values) {
  if (values.size() != static_cast<std::size_t>(h) * w)
    throw ValidationError("grid buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out.write(kDensityMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  put_f32(out, values.data(), values.size());
  if (!out) throw LoadError("write failed: " + path.string());
}

void write_density_map(const std::filesystem::path& path, const DensityMap& map) {
  std::vector<float> f(map.values.begin(), map.values.end());
  write_grid(path, map.h, map.w, f);
}

DensityMap read_density_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  check_magic(in, kDensityMagic, path.string());
  const auto h = get_u32(in, path.string());
  const auto w = get_u32(in, path.string());
  if (h == 0 || w == 0 || static_cast<std::uint64_t>(h) * w > (1u << 28))
    throw LoadError("implausible density map dims in " + path.string());
  DensityMap map(static_cast<int>(h), static_cast<int>(w));
  std::vector<float> f(map.values.size());
  get_f32(in, f.data(), f.size(), path.string());
  for (std::size_t i = 0; i < f.size(); ++i) map.values[i] = f[i];
  return map;
}

void save_weight_dir(const std::filesystem::path& dir,
                     const std::vector<std::pair<std::string, Tensor<float>>>& tensors) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "layers.txt", std::ios::binary);
  if (!manifest) throw LoadError("cannot write " + (dir / "layers.txt").string());
  for (const auto& [name, t] : tensors) {
    manifest << name << '\n';
    std::ofstream out(dir / (name + ".bin"), std::ios::binary);
    if (!out) throw LoadError("cannot write tensor " + name);
    out.write(kWeightMagic, 8);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    put_f32(out, t.ptr(), t.numel());
    if (!out) throw LoadError("write failed for tensor " + name);
  }
}

WeightFile load_weight_dir(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "layers.txt");
  if (!manifest) throw LoadError("cannot open " + (dir / "layers.txt").string());
  WeightFile wf;
  std::string name;
  while (std::getline(manifest, name)) {
    if (!name.empty() && name.back() == '\r') name.pop_back();
    if (name.empty()) continue;
    const auto path = dir / (name + ".bin");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("missing tensor file " + path.string());
    check_magic(in, kWeightMagic, path.string());
    const auto name_len = get_u32(in, path.string());
    std::string stored(name_len, '\0');
    if (!in.read(stored.data(), name_len)) throw LoadError("truncated tensor " + path.string());
    if (stored != name)
      throw LoadError("tensor name mismatch in " + path.string() + ": " + stored);
    const auto rank = get_u32(in, path.string());
    if (rank == 0 || rank > 8) throw LoadError("implausible tensor rank in " + path.string());
    std::vector<int> shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = static_cast<int>(get_u32(in, path.string()));
      if (d <= 0) throw LoadError("bad tensor dim in " + path.string());
      numel *= static_cast<std::size_t>(d);
    }
    if (numel > (1u << 28)) throw LoadError("implausible tensor size in " + path.string());
    Tensor<float> t(shape);
    get_f32(in, t.ptr(), t.numel(), path.string());
    wf.order.push_back(name);
    wf.tensors.emplace(name, std::move(t));
  }
  return wf;
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(key, value);
  }
  return kv;
}

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

void write_kv_file(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw LoadError("bad line in " + path.string() + ": " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace scar
