#include "particles/particles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"

namespace wtt::particles {

namespace {

constexpr std::uint64_t kSeedStream = 0x5eed;
constexpr std::uint64_t kStormStream = 0x5707;

bool solid_at(const SolidMask& m, Vec2 p) {
  const int i = std::clamp(static_cast<int>(std::floor(p.x)), 0, m.nx() - 1);
  const int j = std::clamp(static_cast<int>(std::floor(p.y)), 0, m.ny() - 1);
  return m(i, j) != 0;
}

double below_edge(int n) { return std::nextafter(static_cast<double>(n), 0.0); }

}  // namespace

void SeedingPolicy::validate() const {
  if (n_particles < 0) throw ConfigError("seeding.n_particles", "must be >= 0");
  if (!(west_fraction >= 0.0 && west_fraction <= 1.0)) throw ConfigError("seeding.west_fraction", "must be in [0, 1]");
  if (n_storms < 0) throw ConfigError("seeding.n_storms", "must be >= 0");
  if (storm_spawn_period < 1) throw ConfigError("seeding.storm_spawn_period", "must be >= 1");
  if (max_age < 1) throw ConfigError("seeding.max_age", "must be >= 1");
  if (!(stagnation_speed >= 0.0)) throw ConfigError("seeding.stagnation_speed", "must be >= 0");
  if (stagnation_steps < 1) throw ConfigError("seeding.stagnation_steps", "must be >= 1");
  if (!(deposit >= 0.0)) throw ConfigError("seeding.deposit", "must be >= 0");
  if (!(trail_fade > 0.0 && trail_fade <= 1.0)) throw ConfigError("seeding.trail_fade", "must be in (0, 1]");
  if (!(0.0 <= storm_band_south && storm_band_south < storm_band_north && storm_band_north <= 1.0))
    throw ConfigError("seeding.storm_band_south", "storm band must satisfy 0 <= south < north <= 1");
  if (hit_linger < 1) throw ConfigError("seeding.hit_linger", "must be >= 1");
}

Mover rk2_mover(Sampler s) {
  return [s = std::move(s)](Vec2 p, Vec2&, double dt) {
    const Vec2 mid = p + s(p) * (0.5 * dt);
    return p + s(mid) * dt;
  };
}

Respawner::Respawner(const SeedingPolicy& policy, const SolidMask& solid, std::uint64_t stream)
    : policy_(policy), rng_(derive_seed(policy.seed, stream)) {
  set_solid(solid);
}

void Respawner::set_solid(const SolidMask& solid) {
  nx_ = solid.nx();
  ny_ = solid.ny();
  fluid_.clear();
  west_rows_.clear();
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i)
      if (!solid(i, j)) fluid_.push_back(j * nx_ + i);
  for (int j = 0; j < ny_; ++j)
    if (!solid(0, j)) west_rows_.push_back(j);
}

Vec2 Respawner::in_cell(int i, int j) {
  const double x = i + rng_.uniform();
  const double y = j + rng_.uniform();
  return {x, y};
}

Vec2 Respawner::west_point() {
  if (west_rows_.empty()) return fluid_point();
  const int j = west_rows_[rng_.below(west_rows_.size())];
  return in_cell(0, j);
}

Vec2 Respawner::fluid_point() {
  if (fluid_.empty()) return {0.0, 0.0};
  const int c = fluid_[rng_.below(fluid_.size())];
  return in_cell(c % nx_, c / nx_);
}

Vec2 Respawner::respawn_point() { return rng_.uniform() < policy_.west_fraction ? west_point() : fluid_point(); }

bool Respawner::storm_point(Vec2& out) {
  const double lo = policy_.storm_band_south * ny_, hi = policy_.storm_band_north * ny_;
  // Fluid rows of the west column overlapping the band, weighted by overlap.
  std::vector<std::pair<int, double>> rows;
  double total = 0.0;
  for (int j : west_rows_) {
    const double a = std::max(lo, static_cast<double>(j)), b = std::min(hi, j + 1.0);
    if (b > a) {
      rows.emplace_back(j, b - a);
      total += b - a;
    }
  }
  if (rows.empty()) return false;
  double r = rng_.uniform() * total;
  std::size_t k = 0;
  while (k + 1 < rows.size() && r >= rows[k].second) r -= rows[k++].second;
  const int j = rows[k].first;
  const double a = std::max(lo, static_cast<double>(j)), b = std::min(hi, j + 1.0);
  const double x = rng_.uniform();
  out = {x, a + (b - a) * rng_.uniform()};
  return true;
}

ParticleSet seed_particles(const SeedingPolicy& policy, const SolidMask& solid, EventLog* log) {
  policy.validate();
  Respawner r(policy, solid, kSeedStream);
  ParticleSet out;
  if (!r.has_fluid()) {
    if (log) log->push(0, "warning", "no fluid cells; particle set is empty");
    return out;
  }
  const int n = policy.n_particles;
  const int n_west = static_cast<int>(std::lround(policy.west_fraction * n));
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(Particle{k < n_west ? r.west_point() : r.fluid_point(), {}, 0, k, 0});
  return out;
}

Vec2 push_back(Vec2 from, Vec2 to, const SolidMask& solid) {
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 48; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (solid_at(solid, from + (to - from) * mid)) hi = mid;
    else lo = mid;
  }
  return from + (to - from) * lo;
}

namespace {

enum class Fate { Stay, Exited, Aged, Stagnant };

// Moves one tracer; returns whether it must be respawned.
Fate move_tracer(Vec2& pos, Vec2& vel, std::int64_t& age, int& slow_steps, const Mover& move, double dt,
                 const SolidMask& solid, const SeedingPolicy& policy) {
  const Vec2 from = pos;
  Vec2 to = move(pos, vel, dt);
  if (!std::isfinite(to.x) || !std::isfinite(to.y)) to = from;
  if (to.x >= solid.nx() || to.x < 0.0) return Fate::Exited;
  to.y = std::clamp(to.y, 0.0, below_edge(solid.ny()));
  if (solid_at(solid, to)) to = push_back(from, to, solid);
  pos = to;
  const double speed = dt > 0.0 ? norm(to - from) / dt : 0.0;
  vel = dt > 0.0 ? (to - from) * (1.0 / dt) : Vec2{};
  ++age;
  slow_steps = speed < policy.stagnation_speed ? slow_steps + 1 : 0;
  if (age > policy.max_age) return Fate::Aged;
  if (slow_steps >= policy.stagnation_steps) return Fate::Stagnant;
  return Fate::Stay;
}

}  // namespace

AdvectStats advance(ParticleSet& set, const Mover& move, double dt, const SolidMask& solid, const SeedingPolicy& policy,
                    Respawner& respawn) {
  AdvectStats st;
  for (Particle& p : set) {
    const Fate f = move_tracer(p.pos, p.vel, p.age, p.slow_steps, move, dt, solid, policy);
    if (f == Fate::Stay) continue;
    if (f == Fate::Exited) ++st.exited;
    else if (f == Fate::Aged) ++st.aged;
    else ++st.stagnant;
    p.pos = respawn.respawn_point();
    p.vel = {};
    p.age = 0;
    p.slow_steps = 0;
  }
  return st;
}

AdvectStats advect(ParticleSet& set, const Sampler& velocity, double dt, const SolidMask& solid,
                   const SeedingPolicy& policy, Respawner& respawn) {
  return advance(set, rk2_mover(velocity), dt, solid, policy, respawn);
}

int relocate_from_solids(ParticleSet& set, const SolidMask& solid, Respawner& respawn) {
  int n = 0;
  for (Particle& p : set)
    if (solid_at(solid, p.pos)) {
      p.pos = respawn.respawn_point();
      p.vel = {};
      p.age = 0;
      p.slow_steps = 0;
      ++n;
    }
  return n;
}

void deposit_and_fade(TrailField& trail, const ParticleSet& set, double alpha, double deposit) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "trail fade alpha must be in (0, 1]");
  const double keep = 1.0 - alpha;
  for (double& v : trail.values()) v *= keep;
  for (const Particle& p : set) {
    const int i = static_cast<int>(std::floor(p.pos.x)), j = static_cast<int>(std::floor(p.pos.y));
    if (!trail.in_bounds(i, j)) continue;
    trail(i, j) = std::min(1.0, trail(i, j) + deposit);
  }
}

StormSystem::StormSystem(const SeedingPolicy& policy, const SolidMask& solid, Vec2 target, double hit_radius)
    : policy_(policy), spawner_(policy, solid, kStormStream), target_(target), hit_radius_(hit_radius) {
  policy_.validate();
}

void StormSystem::set_target(Vec2 target, double hit_radius) {
  target_ = target;
  hit_radius_ = hit_radius;
}

void StormSystem::set_solid(const SolidMask& solid) {
  spawner_.set_solid(solid);
  std::erase_if(storms_, [&](const Storm& s) { return solid_at(solid, s.pos); });
}

void StormSystem::step(std::int64_t step, const Sampler& velocity, double dt, const SolidMask& solid, EventLog* log) {
  step_with(step, rk2_mover(velocity), dt, solid, log);
}

void StormSystem::step_with(std::int64_t step, const Mover& move, double dt, const SolidMask& solid, EventLog* log) {
  std::vector<Storm> kept;
  kept.reserve(storms_.size() + 1);
  for (Storm s : storms_) {
    if (s.hit && --s.linger <= 0) continue;
    const Fate f = move_tracer(s.pos, s.vel, s.age, s.slow_steps, move, dt, solid, policy_);
    if (f == Fate::Exited) {
      if (s.pos.x > 0.5 * solid.nx()) exit_rows_.push_back(s.pos.y);
      if (log) log->push(step, "storm_exit", "id=" + std::to_string(s.id));
      continue;
    }
    if (f != Fate::Stay) continue;
    if (!s.hit && norm(s.pos - target_) <= hit_radius_) {
      s.hit = true;
      s.linger = policy_.hit_linger;
      ++hits_;
      if (log) log->push(step, "hit", "id=" + std::to_string(s.id));
    }
    kept.push_back(s);
  }
  storms_ = std::move(kept);

  if (step % policy_.storm_spawn_period == 0 && static_cast<int>(storms_.size()) < policy_.n_storms) {
    Vec2 p;
    if (spawner_.storm_point(p)) {
      storms_.push_back(Storm{p, {}, step, next_id_++, false, 0, 0, 0});
    } else if (!band_warned_) {
      band_warned_ = true;
      if (log) log->push(step, "warning", "storm spawn band is blocked on the west edge");
    }
  }
}

}  // namespace wtt::particles
