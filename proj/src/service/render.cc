#include "simready/service/render.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <zlib.h>

#include "simready/common/error.h"

namespace simready::service {

namespace {

struct Projected {
  double u, v, depth;  // depth grows toward the viewer
};

Projected project(const Eigen::Vector3d& p, View view) {
  switch (view) {
    case View::kFront: return {p.x(), p.y(), p.z()};
    case View::kSide: return {-p.z(), p.y(), p.x()};
    case View::kTop: return {p.x(), -p.z(), p.y()};
  }
  return {p.x(), p.y(), p.z()};
}

std::uint8_t channel(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out += static_cast<char>((v >> s) & 0xff);
}

void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::string body = std::string(type, 4) + data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0, reinterpret_cast<const Bytef*>(body.data()), body.size())));
}

}  // namespace

Image render_particles(std::span<const Eigen::Vector3d> positions,
                       std::span<const Eigen::Vector3d> colors, const Camera& camera) {
  if (positions.size() != colors.size()) {
    throw ValidationError({"positions and colors differ in length"});
  }
  if (camera.width <= 0 || camera.height <= 0 || !(camera.extent > 0.0)) {
    throw ValidationError({"camera needs a positive image size and extent"});
  }
  Image img{camera.width, camera.height,
            std::vector<std::uint8_t>(3 * static_cast<std::size_t>(camera.width) * camera.height)};
  for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
    std::copy(camera.background.begin(), camera.background.end(), img.rgb.begin() + i);
  }

  std::vector<Projected> proj(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) proj[i] = project(positions[i], camera.view);
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proj[a].depth < proj[b].depth; });

  const Projected c = project(camera.center, camera.view);
  const double scale = camera.width / camera.extent;  // pixels per meter
  const double u0 = c.u - 0.5 * camera.extent;
  const double v0 = c.v + 0.5 * camera.height / scale;
  const double r = std::max(0.5, camera.particle_radius * scale);

  for (std::size_t i : order) {
    const double px = (proj[i].u - u0) * scale;
    const double py = (v0 - proj[i].v) * scale;
    const int x_lo = std::max(0, static_cast<int>(std::floor(px - r)));
    const int x_hi = std::min(camera.width - 1, static_cast<int>(std::ceil(px + r)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(py - r)));
    const int y_hi = std::min(camera.height - 1, static_cast<int>(std::ceil(py + r)));
    const std::array<std::uint8_t, 3> rgb = {channel(colors[i].x()), channel(colors[i].y()),
                                             channel(colors[i].z())};
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        // Pixel centers inside the disc.
        const double dx = x + 0.5 - px;
        const double dy = y + 0.5 - py;
        if (dx * dx + dy * dy > r * r) continue;
        std::copy(rgb.begin(), rgb.end(),
                  img.rgb.begin() + 3 * (static_cast<std::size_t>(y) * camera.width + x));
      }
    }
  }
  return img;
}

std::string encode_png(const Image& image) {
  const std::size_t row = 3 * static_cast<std::size_t>(image.width);
  std::string raw;
  raw.reserve((row + 1) * image.height);
  for (int y = 0; y < image.height; ++y) {
    raw += '\0';  // filter: none
    raw.append(reinterpret_cast<const char*>(image.rgb.data()) + y * row, row);
  }
  uLongf size = compressBound(raw.size());
  std::string compressed(size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &size,
                reinterpret_cast<const Bytef*>(raw.data()), raw.size(),
                Z_DEFAULT_COMPRESSION) != Z_OK) {
    throw Error("PNG compression failed");
  }
  compressed.resize(size);

  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr += std::string{8, 2, 0, 0, 0};  // 8-bit, truecolor, deflate, no filter, no interlace

  std::string out = "\x89PNG\r\n\x1a\n";
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", "");
  return out;
}

}  // namespace simready::service
