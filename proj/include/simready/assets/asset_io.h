#pragma once

#include <filesystem>
#include <iosfwd>

#include "simready/assets/asset.h"

namespace simready::assets {

// On-disk layout of a `.sra` file:
//
//   SRA 1 <binary|text>\n
//   <single-line JSON header: schema_version, point_count, metadata, transform>\n
//   <arrays>
//
// Arrays appear in the fixed order positions, colors, part_labels, E, nu,
// sigma_y, phi, rho, behavior. The binary variant packs them as little-endian
// float32 / int32 (unset sigma_y or phi stored as NaN). The text variant
// writes one named section per array with one point per line.
enum class AssetEncoding { kBinary, kText };

inline constexpr int kAssetSchemaVersion = 1;

void write_asset(std::ostream& os, const SimReadyAsset& asset, AssetEncoding encoding);
// Throws ParseError on schema violations, ValidationError on invariant
// violations.
SimReadyAsset read_asset(std::istream& is);

void save_asset(const std::filesystem::path& path, const SimReadyAsset& asset,
                AssetEncoding encoding = AssetEncoding::kBinary);
SimReadyAsset load_asset(const std::filesystem::path& path);

AssetEncoding detect_asset_encoding(const std::filesystem::path& path);

}  // namespace simready::assets
