#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simready/annotation/description.h"
#include "simready/assets/material.h"

namespace simready::annotation {

// One part's answer before validation. `cid` is kept verbatim.
struct RawPartProposal {
  std::string cid;
  std::map<std::string, double> params;  // keys among E, nu, sigma_y, phi, rho

  friend bool operator==(const RawPartProposal&, const RawPartProposal&) = default;
};

struct ParsedProposal {
  std::map<std::string, RawPartProposal> parts;
  std::vector<std::string> warnings;  // unknown keys, ignored entries

  friend bool operator==(const ParsedProposal&, const ParsedProposal&) = default;
};

// Returns the first balanced {...} block, skipping braces inside strings.
// Throws ParseError with an excerpt when there is none.
std::string extract_json_block(std::string_view text);

// Accepts code fences, surrounding prose, // comments and trailing commas.
// Numbers may be JSON numbers or numeric strings. Throws ParseError when no
// block parses or a part lacks "CID".
ParsedProposal parse_parameter_response(std::string_view text);

// {"part": "fine material"} map from a first-round answer.
std::map<std::string, std::string> parse_fine_material_response(std::string_view text);

enum class ValidationMode { kStrict, kLenient };

struct Violation {
  std::string part;
  std::string rule;  // "unknown_part", "missing_part", "bad_cid", "combo", "missing_param", "range"
  std::string detail;

  std::string message() const;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationResult {
  std::map<std::string, assets::MaterialParams> materials;  // filled only when ok()
  std::vector<Violation> errors;
  std::vector<Violation> clamps;  // lenient-mode range repairs
  std::vector<std::string> notes;

  bool ok() const { return errors.empty(); }
};

// Every violation of every part is reported. In lenient mode clampable range
// violations (E, nu, phi) are repaired and recorded instead.
ValidationResult validate_proposal(const ObjectDescription& desc, const ParsedProposal& proposal,
                                   const AllowedCombos& combos = default_allowed_combos(),
                                   ValidationMode mode = ValidationMode::kStrict);

nlohmann::json proposal_to_json(const ParsedProposal& p);
ParsedProposal proposal_from_json(const nlohmann::json& j);
nlohmann::json validation_to_json(const ValidationResult& v);
ValidationResult validation_from_json(const nlohmann::json& j);
nlohmann::json material_to_json(const assets::MaterialParams& m);
assets::MaterialParams material_from_json(const nlohmann::json& j);

}  // namespace simready::annotation
