#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "common/events.hpp"
#include "common/field.hpp"
#include "common/vec2.hpp"

namespace wtt::terrain {

// Raw depth camera frame; values are millimetres from the camera (smaller = taller).
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;

  void validate() const;
};

struct Calibration {
  double near_mm = 800.0;
  double far_mm = 1020.0;
  double table_mm = 1000.0;
  int denoise_radius = 1;

  void validate() const;
};

// Relief height above the table surface in millimetres.
struct HeightField : Field2D<double> {
  using Field2D<double>::Field2D;
};

enum class ReliefClass : int { Empty = 0, LowMountain = 1, HighMountain = 2, IceSheet = 3 };

std::string_view to_string(ReliefClass c);
// Accepts the protocol names ("low", "high", "ice") and the enum names.
ReliefClass relief_class_from_string(std::string_view s);

struct Thresholds {
  double low = 15.0;
  double high = 60.0;
  double ice = 120.0;

  void validate() const;
};

struct ClassHeights {
  double low = 30.0;
  double high = 90.0;
  double ice = 150.0;

  double at(ReliefClass c) const;
};

struct BlockSpec {
  ReliefClass cls = ReliefClass::IceSheet;
  Vec2 center;           // map coordinates, cells
  double width = 24.0;   // footprint along the block's local x axis, cells
  double height = 18.0;  // footprint along the block's local y axis, cells
  double rotation = 0.0; // radians, counter-clockwise

  bool covers(Vec2 p) const;
};

struct ObstacleField {
  Field2D<double> blockage;  // 1 = solid
  Field2D<double> drag;      // 1/s

  int nx() const { return blockage.nx(); }
  int ny() const { return blockage.ny(); }
  bool solid(int i, int j) const { return blockage(i, j) >= 0.5; }
  SolidMask solid_mask() const;
  // FNV-1a over both layers; used to detect layout changes.
  std::uint64_t digest() const;
};

HeightField ingest_depth_frame(const DepthFrame& frame, const Calibration& cal, int grid_nx, int grid_ny);

// Median over the (2r+1)^2 window clipped to the grid; upper median for even counts.
Field2D<double> median_filter(const Field2D<double>& in, int radius);

// Area-weighted average onto an nx x ny grid covering the same extent.
Field2D<double> resample_area_average(const Field2D<double>& in, int nx, int ny);

ReliefClass classify_relief(double height_mm, const Thresholds& t);

HeightField rasterize_blocks(const std::vector<BlockSpec>& blocks, int nx, int ny, const ClassHeights& heights,
                             EventLog* log = nullptr);

ObstacleField obstacles_from_height(const HeightField& h, const Thresholds& t, double drag_low);

// 16-bit binary PGM (P5, maxval 65535, big-endian samples).
DepthFrame read_pgm16(const std::string& path);
void write_pgm16(const std::string& path, const DepthFrame& frame);
// Numbered *.pgm files in a directory, sorted by name.
std::vector<std::string> list_depth_sequence(const std::string& dir);

}  // namespace wtt::terrain
