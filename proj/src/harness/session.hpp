#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "common/events.hpp"
#include "harness/config.hpp"
#include "modes/modes.hpp"
#include "particles/particles.hpp"
#include "terrain/terrain.hpp"
#include "windsim/windsim.hpp"

namespace wtt::harness {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MetricsRow {
  std::int64_t step = 0;
  double mean_speed = kNaN;      // m/s
  double max_divergence = kNaN;  // 1/s; NaN for the repulse engine
  std::int64_t storm_hits = 0;   // cumulative
  double mean_storm_lat = kNaN;  // degrees, live storms
  double lgm_coverage = kNaN;    // Ice Age only
};

// One running exhibit: terrain, engine, tracers, storms and trail.
class Session {
 public:
  explicit Session(const ScenarioConfig& cfg);

  // terrain -> engine -> tracers -> storms -> trail
  void step();

  // Replaces the terrain source with a block layout.
  void set_layout(std::vector<terrain::BlockSpec> blocks);
  void set_mode(modes::Mode mode, std::uint64_t seed);
  // Moves the X target without regenerating the mode.
  void set_target(Vec2 target, double hit_radius);

  const ScenarioConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }
  Engine engine() const { return cfg_.engine; }

  const windsim::FlowState& flow() const { return flow_; }
  const terrain::HeightField& heights() const { return heights_; }
  const terrain::ObstacleField& obstacles() const { return obs_; }
  const SolidMask& solid() const { return solid_; }
  const std::vector<terrain::BlockSpec>& blocks() const { return blocks_; }
  const modes::ModeConfig& mode() const { return mode_; }
  const particles::ParticleSet& tracers() const { return tracers_; }
  const particles::StormSystem& storms() const { return storms_; }
  const particles::TrailField& trail() const { return trail_; }
  const particles::AdvectStats& last_advect() const { return last_advect_; }
  EventLog& events() { return log_; }
  const EventLog& events() const { return log_; }

  // Engine velocity in cells per step at a map position.
  Vec2 velocity_at(Vec2 pos) const;
  // Cells per step per m/s.
  double cells_per_mps() const { return k_; }

  MetricsRow metrics() const;
  double lgm_coverage() const;
  // Latitude (degrees) of every east-edge storm exit so far.
  std::vector<double> exit_latitudes() const;

 private:
  terrain::HeightField user_heights() const;
  void rebuild_terrain(bool initial);
  void apply_mode(modes::Mode mode, std::uint64_t seed);
  particles::Mover mover() const;

  ScenarioConfig cfg_;
  std::int64_t step_ = 0;
  double k_ = 0.0;

  modes::IceAgeData ice_data_;
  modes::ShapeLibrary shapes_;

  std::vector<terrain::BlockSpec> blocks_;
  bool use_depth_ = false;
  std::vector<terrain::HeightField> depth_heights_;
  std::size_t depth_index_ = 0;

  modes::ModeConfig mode_;
  terrain::HeightField heights_;
  terrain::ObstacleField obs_;
  SolidMask solid_;

  windsim::FlowSolver solver_;
  windsim::FlowState flow_;

  particles::Respawner respawn_;
  particles::ParticleSet tracers_;
  particles::StormSystem storms_;
  particles::TrailField trail_;
  particles::AdvectStats last_advect_;

  EventLog log_;
};

}  // namespace wtt::harness
