#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace simready::service {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, top row first

  std::array<std::uint8_t, 3> at(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

enum class View { kFront, kSide, kTop };

// Orthographic camera. kFront looks along -z (image right = +x, up = +y),
// kSide along -x (right = -z, up = +y), kTop along -y (right = +x, up = -z).
struct Camera {
  View view = View::kFront;
  Eigen::Vector3d center = Eigen::Vector3d(1.0, 1.0, 1.0);
  double extent = 2.0;           // world width covered by the image, m
  double particle_radius = 0.012;  // m
  int width = 512;
  int height = 512;
  std::array<std::uint8_t, 3> background = {245, 245, 245};
};

// Particles as flat discs colored by albedo (clamped to [0, 1]), painted far
// to near; equal depths keep index order. Deterministic.
Image render_particles(std::span<const Eigen::Vector3d> positions,
                       std::span<const Eigen::Vector3d> colors, const Camera& camera);

// 8-bit RGB PNG, no filtering, default zlib level. Same image, same bytes.
std::string encode_png(const Image& image);

}  // namespace simready::service
