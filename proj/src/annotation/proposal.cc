#include "simready/annotation/proposal.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "simready/common/error.h"

namespace simready::annotation {

using assets::BehaviorType;
using assets::MaterialParams;
using nlohmann::json;

namespace {

constexpr std::size_t kExcerptLength = 120;

std::string excerpt(std::string_view text) {
  std::string out(text.substr(0, kExcerptLength));
  if (text.size() > kExcerptLength) out += "...";
  return out;
}

// Shortest round-trip form.
std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// Removes commas directly followed (modulo whitespace) by a closing bracket.
std::string strip_trailing_commas(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < s.size()) {
        out += s[++i];
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size()) {
        if (std::isspace(static_cast<unsigned char>(s[j]))) {
          ++j;
        } else if (s.substr(j, 2) == "//") {
          j = std::min(s.find('\n', j), s.size());
        } else if (s.substr(j, 2) == "/*") {
          j = std::min(s.find("*/", j + 2), s.size() - 2) + 2;
        } else {
          break;
        }
      }
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

json parse_block(std::string_view text) {
  const std::string block = extract_json_block(text);
  json j = json::parse(block, nullptr, false, true);
  if (j.is_discarded()) {
    // Comments may hide a trailing comma; strip them first, then the commas.
    json no_comments = json::parse(strip_trailing_commas(block), nullptr, false, true);
    if (no_comments.is_discarded()) {
      throw ParseError("response", "no parseable JSON object in: " + excerpt(text));
    }
    j = std::move(no_comments);
  }
  if (!j.is_object()) throw ParseError("response", "expected a JSON object in: " + excerpt(text));
  return j;
}

double number_value(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    double out = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
    while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
    if (first < last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec == std::errc() && ptr == last) return out;
  }
  throw ParseError(field, "expected a number, got " + v.dump());
}

constexpr std::string_view kParamKeys[] = {"E", "nu", "sigma_y", "phi", "rho"};

}  // namespace

std::string extract_json_block(std::string_view text) {
  std::size_t start = text.find('{');
  if (start == std::string_view::npos) {
    throw ParseError("response", "no JSON object found in: " + excerpt(text));
  }
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return std::string(text.substr(start, i - start + 1));
    }
  }
  throw ParseError("response", "unbalanced braces in: " + excerpt(text.substr(start)));
}

ParsedProposal parse_parameter_response(std::string_view text) {
  const json j = parse_block(text);
  ParsedProposal out;
  for (const auto& [part, entry] : j.items()) {
    if (!entry.is_object()) {
      out.warnings.push_back("entry '" + part + "' is not an object; ignored");
      continue;
    }
    RawPartProposal raw;
    auto cid = entry.find("CID");
    if (cid == entry.end()) throw ParseError(part + ".CID", "missing combination ID");
    if (!cid->is_string()) throw ParseError(part + ".CID", "expected a string");
    raw.cid = cid->get<std::string>();
    for (const auto& [key, value] : entry.items()) {
      if (key == "CID") continue;
      if (std::find(std::begin(kParamKeys), std::end(kParamKeys), key) == std::end(kParamKeys)) {
        out.warnings.push_back("part '" + part + "': unknown key '" + key + "' ignored");
        continue;
      }
      raw.params[key] = number_value(value, part + "." + key);
    }
    out.parts.emplace(part, std::move(raw));
  }
  return out;
}

std::map<std::string, std::string> parse_fine_material_response(std::string_view text) {
  const json j = parse_block(text);
  std::map<std::string, std::string> out;
  for (const auto& [part, value] : j.items()) {
    if (!value.is_string()) throw ParseError(part, "expected a material name");
    out[part] = value.get<std::string>();
  }
  return out;
}

std::string Violation::message() const {
  return (part.empty() ? std::string() : "part '" + part + "': ") + rule + ": " + detail;
}

ValidationResult validate_proposal(const ObjectDescription& desc, const ParsedProposal& proposal,
                                   const AllowedCombos& combos, ValidationMode mode) {
  ValidationResult result;
  std::map<std::string, MaterialParams> materials;
  auto error = [&](const std::string& part, const char* rule, std::string detail) {
    result.errors.push_back({part, rule, std::move(detail)});
  };

  for (const auto& [name, raw] : proposal.parts) {
    if (desc.find_part(name) == nullptr) error(name, "unknown_part", "not in the object description");
  }

  for (const auto& part : desc.parts) {
    auto it = proposal.parts.find(part.name);
    if (it == proposal.parts.end()) {
      error(part.name, "missing_part", "no proposal for this part");
      continue;
    }
    const RawPartProposal& raw = it->second;
    const std::size_t errors_before = result.errors.size();

    BehaviorType behavior = BehaviorType::kM0;
    try {
      behavior = assets::behavior_from_string(raw.cid);
    } catch (const ParseError&) {
      error(part.name, "bad_cid", "'" + raw.cid + "' is not one of M0, M1, M2, M3");
      continue;
    }
    auto allowed = combos.find(part.coarse_material);
    if (allowed == combos.end() || !allowed->second.contains(behavior)) {
      std::string permitted;
      if (allowed != combos.end()) {
        for (BehaviorType b : allowed->second) {
          permitted += (permitted.empty() ? "" : ", ") + std::string(assets::to_string(b));
        }
      }
      error(part.name, "combo",
            raw.cid + " is not permitted for " + part.coarse_material + " (allowed: " +
                (permitted.empty() ? "none" : permitted) + ")");
    }

    std::vector<std::string> required = {"E", "nu", "rho"};
    if (assets::requires_yield_stress(behavior)) required.push_back("sigma_y");
    if (assets::requires_friction_angle(behavior)) required.push_back("phi");
    for (const auto& key : required) {
      if (!raw.params.contains(key)) {
        error(part.name, "missing_param", key + " is required for " + raw.cid);
      }
    }
    for (const auto& [key, value] : raw.params) {
      if (std::find(required.begin(), required.end(), key) == required.end()) {
        result.notes.push_back("part '" + part.name + "': " + key + " is not used by " +
                               raw.cid + " and was dropped");
      }
    }

    // Range rules. Clampable ones are repaired in lenient mode.
    auto ranged = [&](const std::string& key, double lo, double hi,
                      const std::string& range) -> std::optional<double> {
      auto p = raw.params.find(key);
      if (p == raw.params.end()) return std::nullopt;
      const double v = p->second;
      if (std::isfinite(v) && v >= lo && v <= hi) return v;
      const std::string detail = key + "=" + fmt(v) + " outside " + range;
      if (mode == ValidationMode::kLenient && !std::isnan(v)) {
        const double c = std::clamp(v, lo, hi);
        result.clamps.push_back({part.name, "range", detail + "; clamped to " + fmt(c)});
        return c;
      }
      error(part.name, "range", detail);
      return std::nullopt;
    };
    auto positive = [&](const std::string& key) -> std::optional<double> {
      auto p = raw.params.find(key);
      if (p == raw.params.end()) return std::nullopt;
      if (std::isfinite(p->second) && p->second > 0.0) return p->second;
      error(part.name, "range", key + "=" + fmt(p->second) + " must be finite and > 0");
      return std::nullopt;
    };

    MaterialParams m;
    m.behavior = behavior;
    const auto e = ranged("E", assets::kMinYoungsModulus, assets::kMaxYoungsModulus,
                          "[1e4, 1e13] Pa");
    const auto nu = ranged("nu", assets::kMinPoissonRatio, assets::kMaxPoissonRatio,
                           "[0, 0.499]");
    const auto rho = positive("rho");
    if (assets::requires_yield_stress(behavior)) m.yield_stress = positive("sigma_y");
    if (assets::requires_friction_angle(behavior)) {
      m.friction_angle = ranged("phi", assets::kMinFrictionAngle, assets::kMaxFrictionAngle,
                                "[0, pi/2] rad");
    }
    if (result.errors.size() != errors_before) continue;
    m.youngs_modulus = *e;
    m.poisson_ratio = *nu;
    m.density = *rho;
    for (const auto& f : assets::check_material(m)) error(part.name, "range", f);
    materials.emplace(part.name, m);
  }

  if (result.ok()) result.materials = std::move(materials);
  return result;
}

json proposal_to_json(const ParsedProposal& p) {
  json parts = json::object();
  for (const auto& [name, raw] : p.parts) {
    json entry = {{"CID", raw.cid}};
    for (const auto& [k, v] : raw.params) entry[k] = v;
    parts[name] = std::move(entry);
  }
  return {{"parts", std::move(parts)}, {"warnings", p.warnings}};
}

ParsedProposal proposal_from_json(const json& j) {
  ParsedProposal p;
  for (const auto& [name, entry] : j.at("parts").items()) {
    RawPartProposal raw;
    for (const auto& [k, v] : entry.items()) {
      if (k == "CID") {
        raw.cid = v.get<std::string>();
      } else {
        raw.params[k] = v.get<double>();
      }
    }
    p.parts.emplace(name, std::move(raw));
  }
  p.warnings = j.value("warnings", std::vector<std::string>{});
  return p;
}

namespace {

json violations_to_json(const std::vector<Violation>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back({{"part", v.part}, {"rule", v.rule}, {"detail", v.detail}});
  return out;
}

std::vector<Violation> violations_from_json(const json& j) {
  std::vector<Violation> out;
  for (const auto& v : j) {
    out.push_back({v.at("part").get<std::string>(), v.at("rule").get<std::string>(),
                   v.at("detail").get<std::string>()});
  }
  return out;
}

}  // namespace

json material_to_json(const MaterialParams& m) {
  json j = {{"behavior", assets::to_string(m.behavior)},
            {"E", m.youngs_modulus},
            {"nu", m.poisson_ratio},
            {"rho", m.density}};
  if (m.yield_stress) j["sigma_y"] = *m.yield_stress;
  if (m.friction_angle) j["phi"] = *m.friction_angle;
  return j;
}

MaterialParams material_from_json(const json& j) {
  MaterialParams m;
  m.behavior = assets::behavior_from_string(j.at("behavior").get<std::string>());
  m.youngs_modulus = j.at("E").get<double>();
  m.poisson_ratio = j.at("nu").get<double>();
  m.density = j.at("rho").get<double>();
  if (j.contains("sigma_y")) m.yield_stress = j.at("sigma_y").get<double>();
  if (j.contains("phi")) m.friction_angle = j.at("phi").get<double>();
  return m;
}

json validation_to_json(const ValidationResult& v) {
  json materials = json::object();
  for (const auto& [name, m] : v.materials) materials[name] = material_to_json(m);
  return {{"ok", v.ok()},
          {"materials", std::move(materials)},
          {"errors", violations_to_json(v.errors)},
          {"clamps", violations_to_json(v.clamps)},
          {"notes", v.notes}};
}

ValidationResult validation_from_json(const json& j) {
  ValidationResult v;
  for (const auto& [name, m] : j.at("materials").items()) v.materials[name] = material_from_json(m);
  v.errors = violations_from_json(j.at("errors"));
  v.clamps = violations_from_json(j.at("clamps"));
  v.notes = j.at("notes").get<std::vector<std::string>>();
  return v;
}

}  // namespace simready::annotation
