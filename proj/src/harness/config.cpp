#include "harness/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace wtt::harness {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Engine e) { return e == Engine::Cfd ? "cfd" : "repulse"; }

Engine engine_from_string(std::string_view s) {
  if (s == "cfd") return Engine::Cfd;
  if (s == "repulse") return Engine::Repulse;
  throw ConfigError("engine", "expected 'cfd' or 'repulse', got '" + std::string(s) + "'");
}

namespace {

constexpr std::uint64_t kRandomBlocksStream = 0xb10c;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads fields out of one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "(root)" : path_, "expected an object");
  }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return obj_.contains(key);
  }
  const json& raw(const std::string& key) const {
    seen_.insert(key);
    return obj_.at(key);
  }
  std::string at(const std::string& key) const { return join(path_, key); }

  void num(const std::string& key, double& out) const {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    out = v.get<double>();
  }
  template <class I>
  void integer(const std::string& key, I& out) const {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    if constexpr (std::is_unsigned_v<I>) {
      if (v.is_number_unsigned()) out = v.get<I>();
      else if (v.get<std::int64_t>() < 0) throw ConfigError(at(key), "must be >= 0");
      else out = static_cast<I>(v.get<std::int64_t>());
    } else {
      out = static_cast<I>(v.get<std::int64_t>());
    }
  }
  void str(const std::string& key, std::string& out) const {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    out = v.get<std::string>();
  }
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
  }

 private:
  const json& obj_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

void read_grid(const json& j, windsim::GridSpec& g) {
  Reader r(j, "grid");
  r.integer("nx", g.nx);
  r.integer("ny", g.ny);
  r.num("cell_km", g.cell_km);
  r.num("lat_south", g.lat_south);
  r.num("lat_north", g.lat_north);
  r.finish();
}

void read_sim(const json& j, windsim::SimParams& p) {
  Reader r(j, "sim");
  r.num("dt", p.dt);
  r.num("inflow_speed", p.inflow_speed);
  r.num("jet_boost", p.jet_boost);
  r.num("f0", p.f0);
  r.num("beta", p.beta);
  r.num("viscosity", p.viscosity);
  r.num("drag_low", p.drag_low);
  r.integer("projection_iters", p.projection_iters);
  r.num("projection_tol", p.projection_tol);
  r.num("coriolis_strength", p.coriolis_strength);
  r.num("inflow_relax_rate", p.inflow_relax_rate);
  r.num("cfl_target", p.cfl_target);
  std::string b;
  r.str("boundary", b);
  if (!b.empty()) {
    if (b == "channel") p.boundary = windsim::Boundary::Channel;
    else if (b == "open") p.boundary = windsim::Boundary::Open;
    else throw ConfigError("sim.boundary", "expected 'channel' or 'open'");
  }
  r.finish();
}

void read_repulse(const json& j, repulse::RepulseParams& p) {
  Reader r(j, "repulse");
  r.num("base_speed", p.base_speed);
  r.num("force_gain", p.force_gain);
  r.num("falloff_radius", p.falloff_radius);
  r.num("max_force", p.max_force);
  r.finish();
}

void read_seeding(const json& j, particles::SeedingPolicy& p, bool& seed_set) {
  Reader r(j, "seeding");
  r.integer("n_particles", p.n_particles);
  r.num("west_fraction", p.west_fraction);
  r.integer("n_storms", p.n_storms);
  r.integer("storm_spawn_period", p.storm_spawn_period);
  if (r.has("seed")) {
    r.integer("seed", p.seed);
    seed_set = true;
  }
  r.integer("max_age", p.max_age);
  r.num("stagnation_speed", p.stagnation_speed);
  r.integer("stagnation_steps", p.stagnation_steps);
  r.num("deposit", p.deposit);
  r.num("trail_fade", p.trail_fade);
  r.num("storm_band_south", p.storm_band_south);
  r.num("storm_band_north", p.storm_band_north);
  r.integer("hit_linger", p.hit_linger);
  r.finish();
}

void read_terrain(const json& j, ScenarioConfig& c) {
  Reader r(j, "terrain");
  if (r.has("calibration")) {
    Reader q(r.raw("calibration"), "terrain.calibration");
    q.num("near_mm", c.calibration.near_mm);
    q.num("far_mm", c.calibration.far_mm);
    q.num("table_mm", c.calibration.table_mm);
    q.integer("denoise_radius", c.calibration.denoise_radius);
    q.finish();
  }
  if (r.has("thresholds")) {
    Reader q(r.raw("thresholds"), "terrain.thresholds");
    q.num("low", c.thresholds.low);
    q.num("high", c.thresholds.high);
    q.num("ice", c.thresholds.ice);
    q.finish();
  }
  if (r.has("class_heights")) {
    Reader q(r.raw("class_heights"), "terrain.class_heights");
    q.num("low", c.class_heights.low);
    q.num("high", c.class_heights.high);
    q.num("ice", c.class_heights.ice);
    q.finish();
  }
  r.finish();
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base_dir) / path).lexically_normal().string();
}

std::string read_text(const std::string& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(field, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& field) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

std::vector<terrain::BlockSpec> parse_blocks(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array of blocks");
  std::vector<terrain::BlockSpec> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string at = path + "[" + std::to_string(k) + "]";
    Reader r(arr[k], at);
    terrain::BlockSpec b;
    std::string cls;
    r.str("class", cls);
    if (!r.has("class")) throw ConfigError(at + ".class", "required");
    try {
      b.cls = terrain::relief_class_from_string(cls);
    } catch (const Error&) {
      throw ConfigError(at + ".class", "expected 'ice', 'high' or 'low'");
    }
    if (b.cls == terrain::ReliefClass::Empty) throw ConfigError(at + ".class", "expected 'ice', 'high' or 'low'");
    if (!r.has("x")) throw ConfigError(at + ".x", "required");
    if (!r.has("y")) throw ConfigError(at + ".y", "required");
    r.num("x", b.center.x);
    r.num("y", b.center.y);
    r.num("rot", b.rotation);
    r.num("w", b.width);
    r.num("h", b.height);
    r.finish();
    if (!std::isfinite(b.center.x) || !std::isfinite(b.center.y) || !std::isfinite(b.rotation))
      throw ConfigError(at, "coordinates must be finite");
    if (!(b.width > 0.0) || !(b.height > 0.0)) throw ConfigError(at, "footprint must be positive");
    out.push_back(b);
  }
  return out;
}

json blocks_to_json(const std::vector<terrain::BlockSpec>& blocks) {
  json arr = json::array();
  for (const auto& b : blocks)
    arr.push_back({{"class", std::string(terrain::to_string(b.cls))},
                   {"x", b.center.x},
                   {"y", b.center.y},
                   {"rot", b.rotation},
                   {"w", b.width},
                   {"h", b.height}});
  return arr;
}

std::vector<terrain::BlockSpec> generate_random_blocks(const RandomBlocks& r, std::uint64_t scenario_seed,
                                                       const windsim::GridSpec& g) {
  Rng rng(derive_seed(r.seed.value_or(scenario_seed), kRandomBlocksStream));
  static constexpr terrain::ReliefClass classes[] = {terrain::ReliefClass::LowMountain,
                                                     terrain::ReliefClass::HighMountain, terrain::ReliefClass::IceSheet};
  std::vector<terrain::BlockSpec> out;
  for (int k = 0; k < r.count; ++k) {
    terrain::BlockSpec b;
    b.cls = classes[rng.below(3)];
    // Keep the inflow column clear so the west edge always feeds the domain.
    b.center = {rng.uniform(0.15 * g.nx, 0.9 * g.nx), rng.uniform(0.0, static_cast<double>(g.ny))};
    b.rotation = rng.uniform(0.0, std::numbers::pi);
    out.push_back(b);
  }
  return out;
}

void ScenarioConfig::set_seed(std::uint64_t s) {
  seed = s;
  if (!seeding_seed_set) seeding.seed = s;
}

void ScenarioConfig::validate() const {
  grid.validate();
  sim.validate();
  repulse.validate();
  seeding.validate();
  calibration.validate();
  thresholds.validate();
  if (steps < 0) throw ConfigError("steps", "must be >= 0");
  if (metrics_every < 1) throw ConfigError("metrics_every", "must be >= 1");
  if (!(hit_radius >= 0.0)) throw ConfigError("mode.hit_radius", "must be >= 0");
  if (!(coverage_success >= 0.0 && coverage_success <= 1.0)) throw ConfigError("mode.coverage_success", "must be in [0, 1]");
  const int sources = (layout ? 1 : 0) + (random_blocks ? 1 : 0) + (depth_frames ? 1 : 0);
  if (sources != 1)
    throw ConfigError("layout", "exactly one of 'layout', 'random_blocks' or 'depth_frames' is required");
  if (random_blocks && random_blocks->count < 0) throw ConfigError("random_blocks.count", "must be >= 0");
  if (depth_frames && depth_frames->steps_per_frame < 1)
    throw ConfigError("depth_frames.steps_per_frame", "must be >= 1");
  if (!(serve.fps > 0.0)) throw ConfigError("serve.fps", "must be > 0");
  if (serve.snapshot_every < 1) throw ConfigError("serve.snapshot_every", "must be >= 1");
}

ScenarioConfig parse_scenario(const json& doc, const std::string& base_dir) {
  ScenarioConfig c;
  Reader r(doc, "");
  r.str("name", c.name);
  if (r.has("seed")) r.integer("seed", c.seed);
  r.integer("steps", c.steps);
  r.integer("metrics_every", c.metrics_every);
  if (r.has("engine")) {
    std::string e;
    r.str("engine", e);
    c.engine = engine_from_string(e);
  }
  if (r.has("grid")) read_grid(r.raw("grid"), c.grid);
  if (r.has("sim")) read_sim(r.raw("sim"), c.sim);
  if (r.has("repulse")) read_repulse(r.raw("repulse"), c.repulse);
  if (r.has("seeding")) read_seeding(r.raw("seeding"), c.seeding, c.seeding_seed_set);
  if (r.has("terrain")) read_terrain(r.raw("terrain"), c);
  if (r.has("mode")) {
    Reader m(r.raw("mode"), "mode");
    std::string name;
    m.str("mode", name);
    if (!name.empty()) {
      try {
        c.mode = modes::mode_from_string(name);
      } catch (const Error&) {
        throw ConfigError("mode.mode", "expected 'ice_age' or 'moving_mountains'");
      }
    }
    if (m.has("seed")) {
      std::uint64_t s = 0;
      m.integer("seed", s);
      c.mode_seed = s;
    }
    m.num("hit_radius", c.hit_radius);
    m.num("coverage_success", c.coverage_success);
    std::string p;
    m.str("ice_age_data", p);
    if (!p.empty()) c.ice_age_data = resolve(base_dir, p);
    p.clear();
    m.str("shape_library", p);
    if (!p.empty()) c.shape_library = resolve(base_dir, p);
    m.finish();
  }
  if (r.has("layout")) {
    const json& l = r.raw("layout");
    if (l.is_string()) {
      const std::string path = resolve(base_dir, l.get<std::string>());
      const json file = parse_json(read_text(path, "layout"), "layout");
      Reader f(file, "layout");
      if (!f.has("blocks")) throw ConfigError("layout.blocks", "required");
      c.layout = parse_blocks(f.raw("blocks"), "layout.blocks");
      f.finish();
    } else {
      Reader f(l, "layout");
      if (!f.has("blocks")) throw ConfigError("layout.blocks", "required");
      c.layout = parse_blocks(f.raw("blocks"), "layout.blocks");
      f.finish();
    }
  }
  if (r.has("random_blocks")) {
    Reader b(r.raw("random_blocks"), "random_blocks");
    RandomBlocks rb;
    b.integer("count", rb.count);
    if (b.has("seed")) {
      std::uint64_t s = 0;
      b.integer("seed", s);
      rb.seed = s;
    }
    b.finish();
    c.random_blocks = rb;
  }
  if (r.has("depth_frames")) {
    Reader d(r.raw("depth_frames"), "depth_frames");
    DepthSource src;
    d.str("dir", src.dir);
    if (src.dir.empty()) throw ConfigError("depth_frames.dir", "required");
    src.dir = resolve(base_dir, src.dir);
    d.integer("steps_per_frame", src.steps_per_frame);
    d.finish();
    c.depth_frames = src;
  }
  if (r.has("serve")) {
    Reader s(r.raw("serve"), "serve");
    s.num("fps", c.serve.fps);
    s.integer("snapshot_every", c.serve.snapshot_every);
    s.finish();
  }
  r.finish();
  if (!c.seeding_seed_set) c.seeding.seed = c.seed;
  c.validate();
  return c;
}

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& base_dir) {
  return parse_scenario(parse_json(text, "(root)"), base_dir);
}

ScenarioConfig load_scenario(const std::string& path) {
  const std::string text = read_text(path, "(config)");
  const std::string base = fs::path(path).parent_path().string();
  return parse_scenario_text(text, base.empty() ? "." : base);
}

}  // namespace wtt::harness
