#include "simready/assets/asset_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "simready/common/binary_io.h"
#include "simready/common/error.h"

namespace simready::assets {
namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "SRA";
constexpr std::string_view kUnset = "none";

json header_json(const SimReadyAsset& a, AssetEncoding enc) {
  json parts = json::array();
  for (const auto& p : a.metadata.parts) {
    parts.push_back({{"name", p.name},
                     {"coarse_material", p.coarse_material},
                     {"fine_material", p.fine_material}});
  }
  const auto& t = a.transform.translation;
  return {{"schema_version", kAssetSchemaVersion},
          {"encoding", enc == AssetEncoding::kBinary ? "binary" : "text"},
          {"point_count", a.size()},
          {"metadata",
           {{"asset_id", a.metadata.asset_id},
            {"category", a.metadata.category},
            {"parts", parts},
            {"world_scale", a.metadata.world_scale}}},
          {"transform", {{"scale", a.transform.scale}, {"translation", {t.x(), t.y(), t.z()}}}}};
}

template <typename T>
T field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(path + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(path + key, e.what());
  }
}

std::size_t parse_header(const json& h, SimReadyAsset& a) {
  const int version = field<int>(h, "schema_version", "");
  if (version != kAssetSchemaVersion) {
    throw ParseError("schema_version", "unsupported version " + std::to_string(version));
  }
  const auto n = field<std::int64_t>(h, "point_count", "");
  if (n < 1) throw ParseError("point_count", "must be >= 1");

  const json& m = h.contains("metadata") ? h.at("metadata") : json();
  a.metadata.asset_id = field<std::string>(m, "asset_id", "metadata.");
  a.metadata.category = field<std::string>(m, "category", "metadata.");
  a.metadata.world_scale = field<double>(m, "world_scale", "metadata.");
  const auto parts = field<json>(m, "parts", "metadata.");
  if (!parts.is_array()) throw ParseError("metadata.parts", "must be an array");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string path = "metadata.parts[" + std::to_string(i) + "].";
    PartInfo p;
    p.name = field<std::string>(parts[i], "name", path);
    p.coarse_material = field<std::string>(parts[i], "coarse_material", path);
    p.fine_material = parts[i].value("fine_material", "");
    a.metadata.parts.push_back(std::move(p));
  }

  const json& t = h.contains("transform") ? h.at("transform") : json();
  a.transform.scale = field<double>(t, "scale", "transform.");
  const auto tr = field<std::vector<double>>(t, "translation", "transform.");
  if (tr.size() != 3) throw ParseError("transform.translation", "expected 3 components");
  a.transform.translation = {tr[0], tr[1], tr[2]};
  return static_cast<std::size_t>(n);
}

// ---- binary -----------------------------------------------------------------

void write_f32(std::ostream& os, double v) { io::write_le<float>(os, static_cast<float>(v)); }

void write_binary(std::ostream& os, const SimReadyAsset& a) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& p : a.points) for (int k = 0; k < 3; ++k) write_f32(os, p[k]);
  for (const auto& c : a.colors) for (int k = 0; k < 3; ++k) write_f32(os, c[k]);
  for (auto l : a.part_labels) io::write_le<std::int32_t>(os, l);
  for (const auto& m : a.materials) write_f32(os, m.youngs_modulus);
  for (const auto& m : a.materials) write_f32(os, m.poisson_ratio);
  for (const auto& m : a.materials) write_f32(os, m.yield_stress.value_or(nan));
  for (const auto& m : a.materials) write_f32(os, m.friction_angle.value_or(nan));
  for (const auto& m : a.materials) write_f32(os, m.density);
  for (const auto& m : a.materials) io::write_le<std::int32_t>(os, static_cast<std::int32_t>(m.behavior));
}

double read_f32(std::istream& is, const char* name) {
  float v;
  if (!io::read_le(is, v)) throw ParseError(name, "binary blob truncated");
  return static_cast<double>(v);
}

std::int32_t read_i32(std::istream& is, const char* name) {
  std::int32_t v;
  if (!io::read_le(is, v)) throw ParseError(name, "binary blob truncated");
  return v;
}

void read_binary(std::istream& is, std::size_t n, SimReadyAsset& a) {
  a.points.resize(n);
  a.colors.resize(n);
  a.part_labels.resize(n);
  a.materials.resize(n);
  for (auto& p : a.points) for (int k = 0; k < 3; ++k) p[k] = read_f32(is, "positions");
  for (auto& c : a.colors) for (int k = 0; k < 3; ++k) c[k] = read_f32(is, "colors");
  for (auto& l : a.part_labels) l = read_i32(is, "part_labels");
  for (auto& m : a.materials) m.youngs_modulus = read_f32(is, "E");
  for (auto& m : a.materials) m.poisson_ratio = read_f32(is, "nu");
  for (auto& m : a.materials) {
    const double v = read_f32(is, "sigma_y");
    if (!std::isnan(v)) m.yield_stress = v;
  }
  for (auto& m : a.materials) {
    const double v = read_f32(is, "phi");
    if (!std::isnan(v)) m.friction_angle = v;
  }
  for (auto& m : a.materials) m.density = read_f32(is, "rho");
  for (auto& m : a.materials) {
    const auto b = behavior_from_index(read_i32(is, "behavior"));
    if (!b) throw ParseError("behavior", "behavior index out of range");
    m.behavior = *b;
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ParseError("blob", "trailing bytes after the last array");
  }
}

// ---- text -------------------------------------------------------------------

std::string num(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string opt(const std::optional<double>& v) {
  return v ? num(*v) : std::string(kUnset);
}

void write_text(std::ostream& os, const SimReadyAsset& a) {
  os << "positions\n";
  for (const auto& p : a.points) os << num(p.x()) << ' ' << num(p.y()) << ' ' << num(p.z()) << '\n';
  os << "colors\n";
  for (const auto& c : a.colors) os << num(c.x()) << ' ' << num(c.y()) << ' ' << num(c.z()) << '\n';
  os << "part_labels\n";
  for (auto l : a.part_labels) os << l << '\n';
  os << "E\n";
  for (const auto& m : a.materials) os << num(m.youngs_modulus) << '\n';
  os << "nu\n";
  for (const auto& m : a.materials) os << num(m.poisson_ratio) << '\n';
  os << "sigma_y\n";
  for (const auto& m : a.materials) os << opt(m.yield_stress) << '\n';
  os << "phi\n";
  for (const auto& m : a.materials) os << opt(m.friction_angle) << '\n';
  os << "rho\n";
  for (const auto& m : a.materials) os << num(m.density) << '\n';
  os << "behavior\n";
  for (const auto& m : a.materials) os << to_string(m.behavior) << '\n';
}

class TextReader {
 public:
  explicit TextReader(std::istream& is) : is_(is) {}

  void expect_section(const char* name) {
    std::string line;
    if (!std::getline(is_, line) || line != name) {
      throw ParseError(name, "expected section header '" + std::string(name) + "'");
    }
  }

  std::vector<std::string_view> tokens(const char* name, std::size_t count) {
    if (!std::getline(is_, line_)) throw ParseError(name, "unexpected end of file");
    std::vector<std::string_view> out;
    std::string_view rest(line_);
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(' ');
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto end = rest.find(' ');
      out.push_back(rest.substr(0, end));
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (out.size() != count) {
      throw ParseError(name, "expected " + std::to_string(count) + " values, got '" + line_ + "'");
    }
    return out;
  }

  static double to_double(std::string_view tok, const char* name) {
    double v = 0.0;
    auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) {
      throw ParseError(name, "not a number: '" + std::string(tok) + "'");
    }
    return v;
  }

  double scalar(const char* name) { return to_double(tokens(name, 1)[0], name); }

  std::optional<double> optional_scalar(const char* name) {
    auto tok = tokens(name, 1)[0];
    if (tok == kUnset) return std::nullopt;
    return to_double(tok, name);
  }

  Eigen::Vector3d vec3(const char* name) {
    auto t = tokens(name, 3);
    return {to_double(t[0], name), to_double(t[1], name), to_double(t[2], name)};
  }

  std::int32_t integer(const char* name) {
    auto tok = tokens(name, 1)[0];
    std::int32_t v = 0;
    auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) {
      throw ParseError(name, "not an integer: '" + std::string(tok) + "'");
    }
    return v;
  }

  std::string_view word(const char* name) {
    word_ = std::string(tokens(name, 1)[0]);
    return word_;
  }

 private:
  std::istream& is_;
  std::string line_;
  std::string word_;
};

void read_text(std::istream& is, std::size_t n, SimReadyAsset& a) {
  TextReader r(is);
  a.points.resize(n);
  a.colors.resize(n);
  a.part_labels.resize(n);
  a.materials.resize(n);
  r.expect_section("positions");
  for (auto& p : a.points) p = r.vec3("positions");
  r.expect_section("colors");
  for (auto& c : a.colors) c = r.vec3("colors");
  r.expect_section("part_labels");
  for (auto& l : a.part_labels) l = r.integer("part_labels");
  r.expect_section("E");
  for (auto& m : a.materials) m.youngs_modulus = r.scalar("E");
  r.expect_section("nu");
  for (auto& m : a.materials) m.poisson_ratio = r.scalar("nu");
  r.expect_section("sigma_y");
  for (auto& m : a.materials) m.yield_stress = r.optional_scalar("sigma_y");
  r.expect_section("phi");
  for (auto& m : a.materials) m.friction_angle = r.optional_scalar("phi");
  r.expect_section("rho");
  for (auto& m : a.materials) m.density = r.scalar("rho");
  r.expect_section("behavior");
  for (auto& m : a.materials) m.behavior = behavior_from_string(r.word("behavior"));
}

}  // namespace

void write_asset(std::ostream& os, const SimReadyAsset& asset, AssetEncoding encoding) {
  validate_asset(asset);
  os << kMagic << ' ' << kAssetSchemaVersion << ' '
     << (encoding == AssetEncoding::kBinary ? "binary" : "text") << '\n';
  os << header_json(asset, encoding).dump() << '\n';
  if (encoding == AssetEncoding::kBinary) {
    write_binary(os, asset);
  } else {
    write_text(os, asset);
  }
  if (!os) throw Error("failed writing asset");
}

SimReadyAsset read_asset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("magic", "empty file");
  std::istringstream magic(line);
  std::string tag, enc;
  int version = 0;
  magic >> tag >> version >> enc;
  if (tag != kMagic) throw ParseError("magic", "not an SRA file");
  if (version != kAssetSchemaVersion) {
    throw ParseError("schema_version", "unsupported version " + std::to_string(version));
  }
  if (enc != "binary" && enc != "text") throw ParseError("encoding", "unknown encoding '" + enc + "'");

  if (!std::getline(is, line)) throw ParseError("header", "missing JSON header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("header", e.what());
  }
  SimReadyAsset asset;
  const std::size_t n = parse_header(header, asset);
  if (enc == "binary") {
    read_binary(is, n, asset);
  } else {
    read_text(is, n, asset);
  }
  validate_asset(asset);
  return asset;
}

void save_asset(const std::filesystem::path& path, const SimReadyAsset& asset,
                AssetEncoding encoding) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  write_asset(os, asset, encoding);
}

SimReadyAsset load_asset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open asset '" + path.string() + "'");
  return read_asset(is);
}

AssetEncoding detect_asset_encoding(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::string tag, enc;
  int version = 0;
  if (!(is >> tag >> version >> enc) || tag != kMagic) {
    throw ParseError("magic", "'" + path.string() + "' is not an SRA file");
  }
  return enc == "text" ? AssetEncoding::kText : AssetEncoding::kBinary;
}

}  // namespace simready::assets
