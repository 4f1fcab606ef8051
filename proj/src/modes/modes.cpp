#include "modes/modes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace wtt::modes {

namespace bundled {
extern const char* const kShapesJson;
extern const char* const kIceAgeJson;
}  // namespace bundled

namespace {

using nlohmann::json;

constexpr std::uint64_t kNonamelandStream = 0x1a2d;
constexpr std::uint64_t kTargetStream = 0x7a29;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vec2 point_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error(ErrorKind::InvalidArgument, where + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Polygon polygon_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::InvalidArgument, where + ": expected an array of points");
  Polygon p;
  for (std::size_t k = 0; k < j.size(); ++k) p.push_back(point_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  return p;
}

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, what + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::IceAge ? "ice_age" : "moving_mountains"; }

Mode mode_from_string(std::string_view s) {
  if (s == "ice_age") return Mode::IceAge;
  if (s == "moving_mountains") return Mode::MovingMountains;
  throw Error(ErrorKind::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

void validate_library(const ShapeLibrary& lib) {
  if (lib.empty()) throw Error(ErrorKind::InvalidArgument, "shape library is empty");
  for (const Shape& s : lib) {
    if (s.outline.size() < 8) throw Error(ErrorKind::InvalidArgument, "shape '" + s.name + "' has fewer than 8 vertices");
    if (!is_simple_polygon(s.outline)) throw Error(ErrorKind::InvalidArgument, "shape '" + s.name + "' self-intersects");
  }
}

ShapeLibrary parse_shape_library(const std::string& json_text) {
  const json doc = parse(json_text, "shape library");
  if (!doc.contains("shapes") || !doc["shapes"].is_array())
    throw Error(ErrorKind::InvalidArgument, "shape library: missing 'shapes' array");
  ShapeLibrary lib;
  for (std::size_t k = 0; k < doc["shapes"].size(); ++k) {
    const json& s = doc["shapes"][k];
    const std::string where = "shapes[" + std::to_string(k) + "]";
    Shape shape;
    shape.name = s.value("name", where);
    if (!s.contains("outline")) throw Error(ErrorKind::InvalidArgument, where + ": missing outline");
    shape.outline = polygon_from_json(s["outline"], where + ".outline");
    lib.push_back(std::move(shape));
  }
  validate_library(lib);
  return lib;
}

ShapeLibrary load_shape_library(const std::string& path) { return parse_shape_library(read_text(path)); }

const ShapeLibrary& bundled_shapes() {
  static const ShapeLibrary lib = parse_shape_library(bundled::kShapesJson);
  return lib;
}

IceAgeData parse_ice_age_data(const std::string& json_text) {
  const json doc = parse(json_text, "ice age data");
  for (const char* key : {"lgm_zone", "o_marker", "x_target"})
    if (!doc.contains(key)) throw Error(ErrorKind::InvalidArgument, std::string("ice age data: missing '") + key + "'");
  IceAgeData d{polygon_from_json(doc["lgm_zone"], "lgm_zone"), point_from_json(doc["o_marker"], "o_marker"),
               point_from_json(doc["x_target"], "x_target")};
  if (d.lgm_zone.size() < 3 || !is_simple_polygon(d.lgm_zone) || polygon_area(d.lgm_zone) <= 0.0)
    throw Error(ErrorKind::InvalidArgument, "lgm_zone: polygon is degenerate");
  return d;
}

IceAgeData load_ice_age_data(const std::string& path) { return parse_ice_age_data(read_text(path)); }

const IceAgeData& bundled_ice_age_data() {
  static const IceAgeData d = parse_ice_age_data(bundled::kIceAgeJson);
  return d;
}

Vec2 to_grid(Vec2 p, int nx, int ny) { return {p.x * nx, p.y * ny}; }

Polygon to_grid(const Polygon& poly, int nx, int ny) {
  Polygon out;
  out.reserve(poly.size());
  for (Vec2 p : poly) out.push_back(to_grid(p, nx, ny));
  return out;
}

namespace {

// Unit-box outline centred on the origin, flipped, scaled and rotated.
Polygon transform(const Polygon& unit, bool fx, bool fy, double scale, double rot) {
  const double c = std::cos(rot), s = std::sin(rot);
  Polygon out;
  out.reserve(unit.size());
  for (Vec2 p : unit) {
    double x = (p.x - 0.5) * scale, y = (p.y - 0.5) * scale;
    if (fx) x = -x;
    if (fy) y = -y;
    out.push_back({c * x - s * y, s * x + c * y});
  }
  return out;
}

}  // namespace

Nonameland generate_nonameland(std::uint64_t seed, const ShapeLibrary& lib, int nx, int ny, EventLog* log) {
  validate_library(lib);
  Rng rng(derive_seed(seed, kNonamelandStream));
  const double ax0 = 0.1 * nx, ax1 = 0.9 * nx, ay0 = 0.1 * ny, ay1 = 0.9 * ny;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Nonameland n;
    n.shape_index = rng.below(lib.size());
    n.rotation = rng.uniform(0.0, 2.0 * std::numbers::pi);
    n.flip_x = rng.coin();
    n.flip_y = rng.coin();
    n.scale = rng.uniform(0.25, 0.40) * nx;
    const Polygon local = transform(lib[n.shape_index].outline, n.flip_x, n.flip_y, n.scale, n.rotation);
    const Box b = bounding_box(local);
    const double cx0 = ax0 - b.x0, cx1 = ax1 - b.x1, cy0 = ay0 - b.y0, cy1 = ay1 - b.y1;
    if (cx0 > cx1 || cy0 > cy1) continue;
    n.center = {rng.uniform(cx0, cx1), rng.uniform(cy0, cy1)};
    for (Vec2 p : local) n.outline.push_back(p + n.center);
    return n;
  }
  if (log) log->push(0, "warning", "nonameland placement failed after 100 attempts; using a centred shape");
  Nonameland n;
  n.fallback = true;
  n.center = {0.5 * nx, 0.5 * ny};
  const Polygon unit = transform(lib[0].outline, false, false, 1.0, 0.0);
  const Box b = bounding_box(unit);
  n.scale = std::min({0.325 * nx, (ax1 - ax0) / (b.x1 - b.x0), (ay1 - ay0) / (b.y1 - b.y0)});
  for (Vec2 p : unit) n.outline.push_back(p * n.scale + n.center);
  return n;
}

terrain::HeightField nonameland_overlay(const Nonameland& land, int nx, int ny, double low_height) {
  terrain::HeightField h(nx, ny, 0.0);
  const Box b = bounding_box(land.outline);
  const int i0 = std::max(0, static_cast<int>(std::floor(b.x0))), i1 = std::min(nx - 1, static_cast<int>(std::ceil(b.x1)));
  const int j0 = std::max(0, static_cast<int>(std::floor(b.y0))), j1 = std::min(ny - 1, static_cast<int>(std::ceil(b.y1)));
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i)
      if (point_in_polygon({i + 0.5, j + 0.5}, land.outline)) h(i, j) = low_height;
  return h;
}

Vec2 place_target(std::uint64_t seed, int nx, int ny, const SolidMask* solid, EventLog* log) {
  Rng rng(derive_seed(seed, kTargetStream));
  Vec2 t;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    t = {rng.uniform(0.25 * nx, 0.75 * nx), rng.uniform(0.25 * ny, 0.75 * ny)};
    if (!solid) return t;
    const int i = std::min(static_cast<int>(t.x), nx - 1), j = std::min(static_cast<int>(t.y), ny - 1);
    if (!(*solid)(i, j)) return t;
  }
  if (log) log->push(0, "warning", "central area is solid; target left on a solid cell");
  return t;
}

double lgm_coverage(const terrain::HeightField& h, const Polygon& zone, const terrain::Thresholds& t) {
  if (zone.size() < 3) throw Error(ErrorKind::InvalidArgument, "lgm zone needs at least 3 vertices");
  long n = 0, q = 0;
  for (int j = 0; j < h.ny(); ++j)
    for (int i = 0; i < h.nx(); ++i) {
      if (!point_in_polygon({i + 0.5, j + 0.5}, zone)) continue;
      ++n;
      const auto c = terrain::classify_relief(h(i, j), t);
      q += c == terrain::ReliefClass::HighMountain || c == terrain::ReliefClass::IceSheet;
    }
  return n ? static_cast<double>(q) / static_cast<double>(n) : 0.0;
}

std::optional<double> southward_diversion(const std::vector<double>& baseline_exit_lat,
                                          const std::vector<double>& test_exit_lat) {
  if (baseline_exit_lat.empty() || test_exit_lat.empty()) return std::nullopt;
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  return mean(baseline_exit_lat) - mean(test_exit_lat);
}

ModeConfig make_mode(Mode mode, std::uint64_t seed, int nx, int ny, const IceAgeData& data, const ShapeLibrary& lib,
                     const SolidMask* user_solid, double hit_radius, EventLog* log) {
  ModeConfig m;
  m.mode = mode;
  m.seed = seed;
  m.hit_radius = hit_radius;
  if (mode == Mode::IceAge) {
    m.lgm_zone = to_grid(data.lgm_zone, nx, ny);
    m.x_target = to_grid(data.x_target, nx, ny);
    m.o_marker = to_grid(data.o_marker, nx, ny);
  } else {
    m.nonameland = generate_nonameland(seed, lib, nx, ny, log);
    m.x_target = place_target(seed, nx, ny, user_solid, log);
  }
  return m;
}

}  // namespace wtt::modes
