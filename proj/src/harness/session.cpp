#include "harness/session.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/hex.hpp"
#include "repulse/repulse.hpp"

namespace wtt::harness {

namespace {

SolidMask empty_mask(const windsim::GridSpec& g) { return SolidMask(g.nx, g.ny, 0); }

terrain::HeightField max_combine(const terrain::HeightField& a, const terrain::HeightField& b) {
  terrain::HeightField out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = std::max(o[k], bv[k]);
  return out;
}

}  // namespace

Session::Session(const ScenarioConfig& cfg)
    : cfg_(cfg),
      solver_(cfg.grid, cfg.sim),
      respawn_(cfg.seeding, empty_mask(cfg.grid)),
      storms_(cfg.seeding, empty_mask(cfg.grid), {}, cfg.hit_radius) {
  cfg_.validate();
  const auto& g = cfg_.grid;
  k_ = windsim::physical_dt(g, cfg_.sim) / g.cell_m();

  ice_data_ = cfg_.ice_age_data ? modes::load_ice_age_data(*cfg_.ice_age_data) : modes::bundled_ice_age_data();
  shapes_ = cfg_.shape_library ? modes::load_shape_library(*cfg_.shape_library) : modes::bundled_shapes();

  if (cfg_.layout) {
    blocks_ = *cfg_.layout;
  } else if (cfg_.random_blocks) {
    blocks_ = generate_random_blocks(*cfg_.random_blocks, cfg_.seed, g);
  } else {
    use_depth_ = true;
    const auto files = terrain::list_depth_sequence(cfg_.depth_frames->dir);
    if (files.empty()) throw ConfigError("depth_frames.dir", "no .pgm frames in '" + cfg_.depth_frames->dir + "'");
    for (const auto& f : files)
      depth_heights_.push_back(terrain::ingest_depth_frame(terrain::read_pgm16(f), cfg_.calibration, g.nx, g.ny));
  }

  // The target must avoid user blocks, so the mode is built against the
  // user layout before any Nonameland overlay exists.
  const SolidMask user_solid = terrain::obstacles_from_height(user_heights(), cfg_.thresholds, cfg_.sim.drag_low).solid_mask();
  mode_ = modes::make_mode(cfg_.mode, cfg_.effective_mode_seed(), g.nx, g.ny, ice_data_, shapes_, &user_solid,
                           cfg_.hit_radius, &log_);
  mode_.coverage_success = cfg_.coverage_success;
  rebuild_terrain(true);

  flow_ = windsim::equilibrium_state(g, cfg_.sim, obs_);
  tracers_ = particles::seed_particles(cfg_.seeding, solid_, &log_);
  storms_.set_target(mode_.x_target, mode_.hit_radius);
  trail_ = particles::TrailField(g.nx, g.ny, 0.0);
}

terrain::HeightField Session::user_heights() const {
  const auto& g = cfg_.grid;
  if (use_depth_) return depth_heights_[depth_index_];
  return terrain::rasterize_blocks(blocks_, g.nx, g.ny, cfg_.class_heights);
}

void Session::rebuild_terrain(bool initial) {
  const auto& g = cfg_.grid;
  terrain::HeightField h = user_heights();
  if (mode_.nonameland)
    h = max_combine(h, modes::nonameland_overlay(*mode_.nonameland, g.nx, g.ny, cfg_.class_heights.low));
  const std::uint64_t before = initial ? 0 : obs_.digest();
  heights_ = std::move(h);
  obs_ = terrain::obstacles_from_height(heights_, cfg_.thresholds, cfg_.sim.drag_low);
  if (!initial && obs_.digest() == before) return;
  solid_ = obs_.solid_mask();
  respawn_.set_solid(solid_);
  storms_.set_solid(solid_);
  if (!initial) {
    const int moved = particles::relocate_from_solids(tracers_, solid_, respawn_);
    log_.push(step_, "layout", "digest=" + hex64(obs_.digest()) + " relocated=" + std::to_string(moved));
  }
}

void Session::set_layout(std::vector<terrain::BlockSpec> blocks) {
  blocks_ = std::move(blocks);
  use_depth_ = false;
  rebuild_terrain(false);
}

void Session::set_mode(modes::Mode mode, std::uint64_t seed) { apply_mode(mode, seed); }

void Session::set_target(Vec2 target, double hit_radius) {
  mode_.x_target = target;
  mode_.hit_radius = hit_radius;
  storms_.set_target(target, hit_radius);
}

void Session::apply_mode(modes::Mode mode, std::uint64_t seed) {
  const auto& g = cfg_.grid;
  const SolidMask user_solid = terrain::obstacles_from_height(user_heights(), cfg_.thresholds, cfg_.sim.drag_low).solid_mask();
  mode_ = modes::make_mode(mode, seed, g.nx, g.ny, ice_data_, shapes_, &user_solid, cfg_.hit_radius, &log_);
  mode_.coverage_success = cfg_.coverage_success;
  cfg_.mode = mode;
  cfg_.mode_seed = seed;
  log_.push(step_, "mode", std::string(modes::to_string(mode)) + " seed=" + std::to_string(seed));
  rebuild_terrain(false);
  storms_.set_target(mode_.x_target, mode_.hit_radius);
}

particles::Mover Session::mover() const {
  if (cfg_.engine == Engine::Cfd) {
    const windsim::FlowState* f = &flow_;
    const double k = k_;
    return particles::rk2_mover([f, k](Vec2 p) { return windsim::probe(*f, p.x, p.y) * k; });
  }
  const terrain::HeightField* h = &heights_;
  const repulse::RepulseParams rp = cfg_.repulse;
  return [h, rp](Vec2 pos, Vec2& vel, double dt) {
    const repulse::Walker w = repulse::step_particle_repulsive({pos, vel}, *h, rp, dt);
    vel = w.vel;
    return w.pos;
  };
}

Vec2 Session::velocity_at(Vec2 pos) const {
  if (cfg_.engine == Engine::Cfd) return windsim::probe(flow_, pos.x, pos.y) * k_;
  return repulse::field_velocity(pos, heights_, cfg_.repulse);
}

void Session::step() {
  if (use_depth_) {
    const std::size_t idx =
        static_cast<std::size_t>(step_ / cfg_.depth_frames->steps_per_frame) % depth_heights_.size();
    if (idx != depth_index_) {
      depth_index_ = idx;
      rebuild_terrain(false);
    }
  }
  if (cfg_.engine == Engine::Cfd) solver_.step(flow_, obs_, &log_);
  ++step_;
  const particles::Mover move = mover();
  last_advect_ = particles::advance(tracers_, move, 1.0, solid_, cfg_.seeding, respawn_);
  storms_.step_with(step_, move, 1.0, solid_, &log_);
  particles::deposit_and_fade(trail_, tracers_, cfg_.seeding.trail_fade, cfg_.seeding.deposit);
}

double Session::lgm_coverage() const {
  if (mode_.mode != modes::Mode::IceAge) return kNaN;
  return modes::lgm_coverage(heights_, mode_.lgm_zone, cfg_.thresholds);
}

std::vector<double> Session::exit_latitudes() const {
  std::vector<double> out;
  for (double y : storms_.exit_rows()) out.push_back(cfg_.grid.latitude(y));
  return out;
}

MetricsRow Session::metrics() const {
  MetricsRow r;
  r.step = step_;
  if (cfg_.engine == Engine::Cfd) {
    r.mean_speed = windsim::mean_speed(flow_);
    r.max_divergence = windsim::max_divergence(flow_) / cfg_.grid.cell_m();
  } else if (!tracers_.empty()) {
    double sum = 0.0;
    for (const auto& p : tracers_) sum += norm(p.vel);
    r.mean_speed = sum / static_cast<double>(tracers_.size()) / k_;
  }
  r.storm_hits = storms_.hits();
  if (!storms_.storms().empty()) {
    double sum = 0.0;
    for (const auto& s : storms_.storms()) sum += cfg_.grid.latitude(s.pos.y);
    r.mean_storm_lat = sum / static_cast<double>(storms_.storms().size());
  }
  r.lgm_coverage = lgm_coverage();
  return r;
}

}  // namespace wtt::harness
