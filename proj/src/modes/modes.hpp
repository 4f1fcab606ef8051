#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "common/events.hpp"
#include "common/field.hpp"
#include "common/geometry.hpp"
#include "terrain/terrain.hpp"

namespace wtt::modes {

enum class Mode { IceAge, MovingMountains };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

// Closed outline normalised to the unit box.
struct Shape {
  std::string name;
  Polygon outline;
};
using ShapeLibrary = std::vector<Shape>;

// Throws unless non-empty and every outline is simple with >= 8 vertices.
void validate_library(const ShapeLibrary& lib);
// {"shapes": [{"name": .., "outline": [[x, y], ..]}, ..]}
ShapeLibrary parse_shape_library(const std::string& json_text);
ShapeLibrary load_shape_library(const std::string& path);
// data/shapes.json, compiled in.
const ShapeLibrary& bundled_shapes();

// Ice Age map data in normalised [0,1] coordinates (x east, y north).
struct IceAgeData {
  Polygon lgm_zone;
  Vec2 o_marker;  // Mesa Lab, Boulder CO
  Vec2 x_target;
};
IceAgeData parse_ice_age_data(const std::string& json_text);
IceAgeData load_ice_age_data(const std::string& path);
// data/ice_age.json, compiled in.
const IceAgeData& bundled_ice_age_data();

Vec2 to_grid(Vec2 p, int nx, int ny);
Polygon to_grid(const Polygon& poly, int nx, int ny);

struct Nonameland {
  std::size_t shape_index = 0;
  double rotation = 0.0;  // radians in [0, 2 pi)
  bool flip_x = false;
  bool flip_y = false;
  double scale = 0.0;     // cells spanned by the unit box
  Vec2 center;
  Polygon outline;        // grid coordinates
  bool fallback = false;
};

Nonameland generate_nonameland(std::uint64_t seed, const ShapeLibrary& lib, int nx, int ny, EventLog* log = nullptr);
// Cells whose centre lies inside the outline get low_height, others 0.
terrain::HeightField nonameland_overlay(const Nonameland& land, int nx, int ny, double low_height);

// Uniform over the middle 50% in both axes, re-rolled off solid cells.
Vec2 place_target(std::uint64_t seed, int nx, int ny, const SolidMask* solid = nullptr, EventLog* log = nullptr);

// Fraction of zone cells (centre inside) classed HighMountain or IceSheet.
double lgm_coverage(const terrain::HeightField& h, const Polygon& zone, const terrain::Thresholds& t);

// Mean exit latitude of the baseline minus that of the test run; empty when
// either run had no exits.
std::optional<double> southward_diversion(const std::vector<double>& baseline_exit_lat,
                                          const std::vector<double>& test_exit_lat);

struct ModeConfig {
  Mode mode = Mode::IceAge;
  std::uint64_t seed = 0;
  Polygon lgm_zone;            // grid coordinates; Ice Age only
  Vec2 x_target;
  std::optional<Vec2> o_marker;
  double hit_radius = 4.0;
  double coverage_success = 0.7;
  std::optional<Nonameland> nonameland;
};

ModeConfig make_mode(Mode mode, std::uint64_t seed, int nx, int ny, const IceAgeData& data, const ShapeLibrary& lib,
                     const SolidMask* user_solid, double hit_radius, EventLog* log = nullptr);

}  // namespace wtt::modes
