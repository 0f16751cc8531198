#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simready/assets/material.h"

namespace simready::annotation {

inline constexpr std::array<std::string_view, 8> kCoarseMaterials = {
    "ceramic", "fabric", "leather", "metal", "plant", "plastic", "soil", "wood"};

bool is_coarse_material(std::string_view name);

struct PartDescription {
  std::string name;
  std::string coarse_material;
  std::string fine_material;  // empty until the first round assigns one
  std::string color;          // color word, e.g. "brown"

  friend bool operator==(const PartDescription&, const PartDescription&) = default;
};

// What the annotation model is told about one object.
struct ObjectDescription {
  std::string shape_name;
  std::vector<PartDescription> parts;
  std::vector<std::string> images;  // paths or URLs of the rendered views

  const PartDescription* find_part(std::string_view name) const;
  friend bool operator==(const ObjectDescription&, const ObjectDescription&) = default;
};

std::vector<std::string> check_description(const ObjectDescription& desc);
void validate_description(const ObjectDescription& desc);

nlohmann::json description_to_json(const ObjectDescription& desc);
// Throws ParseError on unknown keys or wrong types, ValidationError on
// invariant violations.
ObjectDescription description_from_json(const nlohmann::json& j);

// Ordered fine-grained options per coarse material. Only fabric, leather and
// plastic have one.
const std::map<std::string, std::vector<std::string>, std::less<>>& fine_material_catalogs();
// nullptr when the coarse material has no catalog.
const std::vector<std::string>* fine_catalog(std::string_view coarse);

// Coarse material -> permitted behavior types.
using AllowedCombos = std::map<std::string, std::set<assets::BehaviorType>, std::less<>>;
const AllowedCombos& default_allowed_combos();

}  // namespace simready::annotation
