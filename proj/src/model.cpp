#include "scar/model.hpp"

namespace scar {

Variant parse_variant(const std::string& name) {
  if (name == "FCN") return Variant::FCN;
  if (name == "FCN+SAM") return Variant::FCN_SAM;
  if (name == "FCN+CAM") return Variant::FCN_CAM;
  if (name == "SCAR") return Variant::SCAR;
  throw ConfigError("unknown variant '" + name + "' (expected FCN, FCN+SAM, FCN+CAM or SCAR)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::FCN: return "FCN";
    case Variant::FCN_SAM: return "FCN+SAM";
    case Variant::FCN_CAM: return "FCN+CAM";
    case Variant::SCAR: return "SCAR";
  }
  return "?";
}

Fusion parse_fusion(const std::string& name) {
  if (name == "concat") return Fusion::Concat;
  if (name == "sum") return Fusion::Sum;
  throw ConfigError("unknown fusion '" + name + "' (expected concat or sum)");
}

std::string fusion_name(Fusion f) {
  return f == Fusion::Concat ? "concat" : "sum";
}

}  // namespace scar
