#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "common/events.hpp"
#include "common/field.hpp"
#include "common/rng.hpp"
#include "common/vec2.hpp"

namespace wtt::particles {

struct Particle {
  Vec2 pos;  // map coordinates, cells
  Vec2 vel;  // cells per step, last displacement rate
  std::int64_t age = 0;
  std::int64_t id = 0;
  int slow_steps = 0;
};

using ParticleSet = std::vector<Particle>;

struct Storm {
  Vec2 pos;
  Vec2 vel;
  std::int64_t spawn_step = 0;
  std::int64_t id = 0;
  bool hit = false;
  int linger = 0;  // steps left on the board after a hit
  std::int64_t age = 0;
  int slow_steps = 0;
};

// Per-cell trail intensity in [0,1].
using TrailField = Field2D<double>;

struct SeedingPolicy {
  int n_particles = 5000;
  double west_fraction = 0.6;
  int n_storms = 8;
  int storm_spawn_period = 20;  // steps
  std::uint64_t seed = 42;
  int max_age = 1500;             // steps
  double stagnation_speed = 0.02; // cells per step
  int stagnation_steps = 60;
  double deposit = 0.3;
  double trail_fade = 0.1;
  double storm_band_south = 2.0 / 3.0;  // fraction of ny
  double storm_band_north = 0.95;
  int hit_linger = 15;

  void validate() const;
};

// Velocity in cells per unit time at a map position.
using Sampler = std::function<Vec2(Vec2)>;
// Proposes a new position for a tracer at pos over dt; may update its velocity state.
using Mover = std::function<Vec2(Vec2 pos, Vec2& vel, double dt)>;

// Midpoint (RK2) step through a sampler.
Mover rk2_mover(Sampler s);

// Draws spawn points over the fluid cells of a solid mask.
class Respawner {
 public:
  Respawner(const SeedingPolicy& policy, const SolidMask& solid, std::uint64_t stream = 1);

  void set_solid(const SolidMask& solid);
  bool has_fluid() const { return !fluid_.empty(); }
  Vec2 west_point();
  Vec2 fluid_point();
  // West edge with probability west_fraction, interior otherwise.
  Vec2 respawn_point();
  // West edge inside the northern storm band; false when the band is blocked.
  bool storm_point(Vec2& out);

 private:
  Vec2 in_cell(int i, int j);

  SeedingPolicy policy_;
  Rng rng_;
  int nx_ = 0, ny_ = 0;
  std::vector<int> fluid_;     // flattened cell indices
  std::vector<int> west_rows_; // fluid rows of column 0
};

// round(west_fraction * n) particles on the west edge (ids first), the rest
// uniform over fluid cells.
ParticleSet seed_particles(const SeedingPolicy& policy, const SolidMask& solid, EventLog* log = nullptr);

struct AdvectStats {
  int exited = 0;
  int aged = 0;
  int stagnant = 0;
};

// Last point of the segment from -> to that is still in fluid; `from` must be fluid.
Vec2 push_back(Vec2 from, Vec2 to, const SolidMask& solid);

AdvectStats advance(ParticleSet& set, const Mover& move, double dt, const SolidMask& solid, const SeedingPolicy& policy,
                    Respawner& respawn);
AdvectStats advect(ParticleSet& set, const Sampler& velocity, double dt, const SolidMask& solid,
                   const SeedingPolicy& policy, Respawner& respawn);

// Respawns particles caught inside solid cells after a layout change.
int relocate_from_solids(ParticleSet& set, const SolidMask& solid, Respawner& respawn);

// trail <- (1 - alpha) trail, then each particle's cell <- min(1, value + deposit).
void deposit_and_fade(TrailField& trail, const ParticleSet& set, double alpha, double deposit);

class StormSystem {
 public:
  StormSystem(const SeedingPolicy& policy, const SolidMask& solid, Vec2 target, double hit_radius);

  void set_target(Vec2 target, double hit_radius);
  void set_solid(const SolidMask& solid);
  void step(std::int64_t step, const Sampler& velocity, double dt, const SolidMask& solid, EventLog* log);
  void step_with(std::int64_t step, const Mover& move, double dt, const SolidMask& solid, EventLog* log);

  const std::vector<Storm>& storms() const { return storms_; }
  std::int64_t hits() const { return hits_; }
  // Row coordinate of every storm that left through the east edge.
  const std::vector<double>& exit_rows() const { return exit_rows_; }
  Vec2 target() const { return target_; }
  double hit_radius() const { return hit_radius_; }

 private:
  SeedingPolicy policy_;
  Respawner spawner_;
  Vec2 target_;
  double hit_radius_;
  std::vector<Storm> storms_;
  std::int64_t next_id_ = 0;
  std::int64_t hits_ = 0;
  std::vector<double> exit_rows_;
  bool band_warned_ = false;
};

}  // namespace wtt::particles
