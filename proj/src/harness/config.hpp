#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modes/modes.hpp"
#include "particles/particles.hpp"
#include "repulse/repulse.hpp"
#include "terrain/terrain.hpp"
#include "windsim/windsim.hpp"

namespace wtt::harness {

enum class Engine { Cfd, Repulse };

std::string_view to_string(Engine e);
Engine engine_from_string(std::string_view s);

struct RandomBlocks {
  int count = 12;
  std::optional<std::uint64_t> seed;  // defaults to the scenario seed
};

struct DepthSource {
  std::string dir;
  int steps_per_frame = 30;
};

struct ServeSettings {
  double fps = 30.0;
  int snapshot_every = 1;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 42;
  std::int64_t steps = 1000;
  int metrics_every = 10;
  Engine engine = Engine::Cfd;

  windsim::GridSpec grid;
  windsim::SimParams sim;
  repulse::RepulseParams repulse;
  particles::SeedingPolicy seeding;
  bool seeding_seed_set = false;

  terrain::Calibration calibration;
  terrain::Thresholds thresholds;
  terrain::ClassHeights class_heights;

  modes::Mode mode = modes::Mode::IceAge;
  std::optional<std::uint64_t> mode_seed;
  double hit_radius = 4.0;
  double coverage_success = 0.7;
  std::optional<std::string> ice_age_data;  // path; bundled data otherwise
  std::optional<std::string> shape_library; // path; bundled shapes otherwise

  // Exactly one terrain source.
  std::optional<std::vector<terrain::BlockSpec>> layout;
  std::optional<RandomBlocks> random_blocks;
  std::optional<DepthSource> depth_frames;

  ServeSettings serve;

  void validate() const;
  // Seeds the per-subsystem streams follow unless set explicitly.
  std::uint64_t effective_mode_seed() const { return mode_seed.value_or(seed); }
  void set_seed(std::uint64_t s);
};

// Parses a scenario document; relative paths resolve against base_dir.
// Errors are ConfigError with the dotted path of the offending field.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::string& base_dir = ".");
ScenarioConfig parse_scenario_text(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

// Block records as used by layout files and the protocol:
// {"class": "ice|high|low", "x": .., "y": .., "rot": .., "w": .., "h": ..}
std::vector<terrain::BlockSpec> parse_blocks(const nlohmann::json& arr, const std::string& path);
nlohmann::json blocks_to_json(const std::vector<terrain::BlockSpec>& blocks);

std::vector<terrain::BlockSpec> generate_random_blocks(const RandomBlocks& r, std::uint64_t scenario_seed,
                                                       const windsim::GridSpec& g);

}  // namespace wtt::harness
