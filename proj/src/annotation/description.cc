#include "simready/annotation/description.h"

#include <algorithm>

#include "simready/common/error.h"

namespace simready::annotation {

using assets::BehaviorType;
using nlohmann::json;

bool is_coarse_material(std::string_view name) {
  return std::find(kCoarseMaterials.begin(), kCoarseMaterials.end(), name) !=
         kCoarseMaterials.end();
}

const PartDescription* ObjectDescription::find_part(std::string_view name) const {
  for (const auto& p : parts) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<std::string> check_description(const ObjectDescription& desc) {
  std::vector<std::string> out;
  if (desc.shape_name.empty()) out.push_back("shape_name is empty");
  if (desc.parts.empty()) out.push_back("at least one part is required");
  std::vector<std::string_view> seen;
  for (const auto& p : desc.parts) {
    if (p.name.empty()) {
      out.push_back("part with empty name");
      continue;
    }
    if (std::find(seen.begin(), seen.end(), p.name) != seen.end()) {
      out.push_back("duplicate part '" + p.name + "'");
    }
    seen.push_back(p.name);
    if (!is_coarse_material(p.coarse_material)) {
      out.push_back("part '" + p.name + "': unknown coarse material '" + p.coarse_material + "'");
      continue;
    }
    if (!p.fine_material.empty()) {
      const auto* catalog = fine_catalog(p.coarse_material);
      if (catalog == nullptr ||
          std::find(catalog->begin(), catalog->end(), p.fine_material) == catalog->end()) {
        out.push_back("part '" + p.name + "': fine material '" + p.fine_material +
                      "' is not offered for " + p.coarse_material);
      }
    }
  }
  return out;
}

void validate_description(const ObjectDescription& desc) {
  auto failures = check_description(desc);
  if (!failures.empty()) throw ValidationError(std::move(failures));
}

json description_to_json(const ObjectDescription& desc) {
  json parts = json::array();
  for (const auto& p : desc.parts) {
    json jp = {{"name", p.name}, {"coarse_material", p.coarse_material}, {"color", p.color}};
    if (!p.fine_material.empty()) jp["fine_material"] = p.fine_material;
    parts.push_back(std::move(jp));
  }
  return {{"shape_name", desc.shape_name}, {"parts", std::move(parts)}, {"images", desc.images}};
}

namespace {

std::string string_field(const json& j, const char* key, const std::string& where, bool required) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) throw ParseError(where + key, "missing");
    return {};
  }
  if (!it->is_string()) throw ParseError(where + key, "expected a string");
  return it->get<std::string>();
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys,
                    const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ParseError(where + k, "unknown field");
    }
  }
}

}  // namespace

ObjectDescription description_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("description", "expected an object");
  reject_unknown(j, {"shape_name", "parts", "images"}, "");
  ObjectDescription desc;
  desc.shape_name = string_field(j, "shape_name", "", true);
  auto parts = j.find("parts");
  if (parts == j.end() || !parts->is_array()) throw ParseError("parts", "expected an array");
  for (std::size_t i = 0; i < parts->size(); ++i) {
    const json& jp = (*parts)[i];
    const std::string where = "parts[" + std::to_string(i) + "].";
    if (!jp.is_object()) throw ParseError(where, "expected an object");
    reject_unknown(jp, {"name", "coarse_material", "fine_material", "color"}, where);
    desc.parts.push_back({string_field(jp, "name", where, true),
                          string_field(jp, "coarse_material", where, true),
                          string_field(jp, "fine_material", where, false),
                          string_field(jp, "color", where, false)});
  }
  if (auto images = j.find("images"); images != j.end()) {
    if (!images->is_array()) throw ParseError("images", "expected an array of strings");
    for (const auto& im : *images) {
      if (!im.is_string()) throw ParseError("images", "expected an array of strings");
      desc.images.push_back(im.get<std::string>());
    }
  }
  validate_description(desc);
  return desc;
}

const std::map<std::string, std::vector<std::string>, std::less<>>& fine_material_catalogs() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> catalogs = {
      {"fabric",
       {"cotton", "wool", "polyester", "silk", "denim", "spandex", "linen", "rayon"}},
      {"leather",
       {"full-grain leather", "top-grain leather", "genuine leather", "nubuck leather", "suede",
        "patent leather", "bonded leather", "faux leather"}},
      {"plastic",
       {"low-density polyethylene", "high-density polyethylene", "polyethylene terephthalate",
        "polypropylene", "rigid polyvinyl chloride", "flexible polyvinyl chloride",
        "polystyrene", "polycarbonate", "acrylonitrile butadiene styrene", "polyamide",
        "polyurethane", "thermoplastic elastomers"}},
  };
  return catalogs;
}

const std::vector<std::string>* fine_catalog(std::string_view coarse) {
  const auto& catalogs = fine_material_catalogs();
  auto it = catalogs.find(coarse);
  return it == catalogs.end() ? nullptr : &it->second;
}

const AllowedCombos& default_allowed_combos() {
  static const AllowedCombos combos = {
      {"ceramic", {BehaviorType::kM1}},
      {"fabric", {BehaviorType::kM0, BehaviorType::kM1}},
      {"leather", {BehaviorType::kM0, BehaviorType::kM1}},
      {"metal", {BehaviorType::kM2}},
      {"plant", {BehaviorType::kM0}},
      {"plastic", {BehaviorType::kM1}},
      {"soil", {BehaviorType::kM3}},
      {"wood", {BehaviorType::kM1}},
  };
  return combos;
}

}  // namespace simready::annotation
