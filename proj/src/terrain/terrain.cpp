#include "terrain/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common/error.hpp"

namespace wtt::terrain {

void DepthFrame::validate() const {
  if (width <= 0 || height <= 0)
    throw Error(ErrorKind::InvalidArgument, "depth frame: non-positive dimensions");
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    std::ostringstream os;
    os << "depth frame: header declares " << width << "x" << height << " but carries " << values.size()
       << " samples";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
}

void Calibration::validate() const {
  if (!(near_mm < table_mm && table_mm <= far_mm))
    throw ConfigError("calibration", "require near_mm < table_mm <= far_mm");
  if (denoise_radius < 0) throw ConfigError("calibration.denoise_radius", "must be >= 0");
}

std::string_view to_string(ReliefClass c) {
  switch (c) {
    case ReliefClass::Empty: return "empty";
    case ReliefClass::LowMountain: return "low";
    case ReliefClass::HighMountain: return "high";
    case ReliefClass::IceSheet: return "ice";
  }
  return "empty";
}

ReliefClass relief_class_from_string(std::string_view s) {
  if (s == "low" || s == "LowMountain") return ReliefClass::LowMountain;
  if (s == "high" || s == "HighMountain") return ReliefClass::HighMountain;
  if (s == "ice" || s == "IceSheet") return ReliefClass::IceSheet;
  if (s == "empty" || s == "Empty") return ReliefClass::Empty;
  throw Error(ErrorKind::InvalidArgument, "unknown relief class '" + std::string(s) + "'");
}

void Thresholds::validate() const {
  if (!(0.0 < low && low < high && high < ice))
    throw ConfigError("thresholds", "require 0 < low < high < ice");
}

double ClassHeights::at(ReliefClass c) const {
  switch (c) {
    case ReliefClass::LowMountain: return low;
    case ReliefClass::HighMountain: return high;
    case ReliefClass::IceSheet: return ice;
    case ReliefClass::Empty: return 0.0;
  }
  return 0.0;
}

bool BlockSpec::covers(Vec2 p) const {
  const Vec2 d = p - center;
  const double c = std::cos(rotation), s = std::sin(rotation);
  const double lx = c * d.x + s * d.y;
  const double ly = -s * d.x + c * d.y;
  return std::abs(lx) <= 0.5 * width && std::abs(ly) <= 0.5 * height;
}

SolidMask ObstacleField::solid_mask() const {
  SolidMask m(nx(), ny(), 0);
  for (int j = 0; j < ny(); ++j)
    for (int i = 0; i < nx(); ++i) m(i, j) = solid(i, j) ? 1 : 0;
  return m;
}

std::uint64_t ObstacleField::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= b[k];
      h *= 0x100000001b3ull;
    }
  };
  const int dims[2] = {nx(), ny()};
  mix(dims, sizeof dims);
  mix(blockage.data(), blockage.size() * sizeof(double));
  mix(drag.data(), drag.size() * sizeof(double));
  return h;
}

Field2D<double> median_filter(const Field2D<double>& in, int radius) {
  if (radius <= 0) return in;
  Field2D<double> out(in.nx(), in.ny());
  std::vector<double> window;
  window.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
  for (int j = 0; j < in.ny(); ++j) {
    for (int i = 0; i < in.nx(); ++i) {
      window.clear();
      for (int dj = -radius; dj <= radius; ++dj)
        for (int di = -radius; di <= radius; ++di)
          if (in.in_bounds(i + di, j + dj)) window.push_back(in(i + di, j + dj));
      auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      out(i, j) = *mid;
    }
  }
  return out;
}

namespace {

// weights[t] lists (source index, overlap length) for target cell t.
std::vector<std::vector<std::pair<int, double>>> overlap_weights(int src, int dst) {
  std::vector<std::vector<std::pair<int, double>>> w(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int t = 0; t < dst; ++t) {
    const double a = t * scale, b = (t + 1) * scale;
    for (int s = static_cast<int>(std::floor(a)); s < src && s < b; ++s) {
      const double len = std::min(b, s + 1.0) - std::max(a, static_cast<double>(s));
      if (len > 0.0) w[t].emplace_back(s, len);
    }
  }
  return w;
}

}  // namespace

Field2D<double> resample_area_average(const Field2D<double>& in, int nx, int ny) {
  if (in.nx() == nx && in.ny() == ny) return in;
  const auto wx = overlap_weights(in.nx(), nx);
  const auto wy = overlap_weights(in.ny(), ny);
  Field2D<double> out(nx, ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double sum = 0.0, area = 0.0;
      for (auto [sj, ly] : wy[j])
        for (auto [si, lx] : wx[i]) {
          sum += in(si, sj) * lx * ly;
          area += lx * ly;
        }
      out(i, j) = area > 0.0 ? sum / area : 0.0;
    }
  }
  return out;
}

HeightField ingest_depth_frame(const DepthFrame& frame, const Calibration& cal, int grid_nx, int grid_ny) {
  frame.validate();
  cal.validate();
  Field2D<double> h(frame.width, frame.height);
  for (int j = 0; j < frame.height; ++j) {
    for (int i = 0; i < frame.width; ++i) {
      // PGM rows run top (north) to bottom; grid row 0 is south.
      double d = frame.values[static_cast<std::size_t>(frame.height - 1 - j) * frame.width + i];
      if (d < cal.near_mm || d > cal.far_mm) d = cal.table_mm;
      h(i, j) = std::max(0.0, cal.table_mm - d);
    }
  }
  h = median_filter(h, cal.denoise_radius);
  h = resample_area_average(h, grid_nx, grid_ny);
  HeightField out(grid_nx, grid_ny);
  std::copy(h.values().begin(), h.values().end(), out.values().begin());
  return out;
}

ReliefClass classify_relief(double height_mm, const Thresholds& t) {
  if (height_mm >= t.ice) return ReliefClass::IceSheet;
  if (height_mm >= t.high) return ReliefClass::HighMountain;
  if (height_mm >= t.low) return ReliefClass::LowMountain;
  return ReliefClass::Empty;
}

HeightField rasterize_blocks(const std::vector<BlockSpec>& blocks, int nx, int ny, const ClassHeights& heights,
                             EventLog* log) {
  HeightField h(nx, ny, 0.0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const BlockSpec& blk = blocks[b];
    if (blk.cls == ReliefClass::Empty)
      throw Error(ErrorKind::InvalidArgument, "block " + std::to_string(b) + ": class must not be empty");
    const double c = std::abs(std::cos(blk.rotation)), s = std::abs(std::sin(blk.rotation));
    const double hx = 0.5 * (c * blk.width + s * blk.height);
    const double hy = 0.5 * (s * blk.width + c * blk.height);
    const double x0 = blk.center.x - hx, x1 = blk.center.x + hx;
    const double y0 = blk.center.y - hy, y1 = blk.center.y + hy;
    if (log && (x0 < 0.0 || y0 < 0.0 || x1 > nx || y1 > ny))
      log->push(0, "warning", "block " + std::to_string(b) + " extends outside the grid; clamped");
    const double value = heights.at(blk.cls);
    const int i0 = std::max(0, static_cast<int>(std::floor(x0)));
    const int i1 = std::min(nx - 1, static_cast<int>(std::ceil(x1)));
    const int j0 = std::max(0, static_cast<int>(std::floor(y0)));
    const int j1 = std::min(ny - 1, static_cast<int>(std::ceil(y1)));
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        if (blk.covers({i + 0.5, j + 0.5})) h(i, j) = std::max(h(i, j), value);
  }
  return h;
}

ObstacleField obstacles_from_height(const HeightField& h, const Thresholds& t, double drag_low) {
  t.validate();
  ObstacleField o{Field2D<double>(h.nx(), h.ny(), 0.0), Field2D<double>(h.nx(), h.ny(), 0.0)};
  for (int j = 0; j < h.ny(); ++j) {
    for (int i = 0; i < h.nx(); ++i) {
      switch (classify_relief(h(i, j), t)) {
        case ReliefClass::Empty: break;
        case ReliefClass::LowMountain: o.drag(i, j) = drag_low; break;
        case ReliefClass::HighMountain:
        case ReliefClass::IceSheet: o.blockage(i, j) = 1.0; break;
      }
    }
  }
  return o;
}

}  // namespace wtt::terrain
