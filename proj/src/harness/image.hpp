#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "common/field.hpp"
#include "common/geometry.hpp"
#include "common/hex.hpp"
#include "common/vec2.hpp"

namespace wtt::harness {

enum OverlayFlags : unsigned {
  kOverlayNone = 0,
  kOverlayOutline = 1,  // solid cell edges
  kOverlayMarkers = 2,  // X target, O marker, LGM zone, Nonameland
  kOverlayStorms = 4,
  kOverlayAll = 7,
};

// Everything a frame image is drawn from. Trail is one byte per cell,
// row-major with row 0 at the south edge.
struct FrameView {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> trail;
  SolidMask solid;
  std::vector<std::array<double, 3>> storms;  // x, y, hit
  std::optional<Vec2> x_target;
  double hit_radius = 0.0;
  std::optional<Vec2> o_marker;
  Polygon lgm_zone;
  Polygon nonameland;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row 0 at the top (north)

  std::array<std::uint8_t, 3> at(int x, int y) const;
  // FNV-1a 64 over the RGB bytes.
  std::uint64_t checksum() const;
};

std::uint8_t quantize_intensity(double v);

// `scale` pixels per cell.
Image render_frame(const FrameView& view, unsigned flags, int scale);

// Throws Error(Io) naming the path when it cannot be written.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

}  // namespace wtt::harness
