#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "harness/image.hpp"
#include "harness/session.hpp"

namespace wtt::harness {

struct RunOptions {
  std::string metrics_path;   // CSV; skipped when empty
  std::string frames_dir;     // PNG frames and checksums.txt; skipped when empty
  int every = 0;              // frame interval in steps
  std::string events_path;    // JSON lines; skipped when empty
  std::string snapshot_path;  // final snapshot JSON; skipped when empty
  unsigned overlay = kOverlayAll;
  int scale = 4;              // pixels per cell
  bool summary = true;        // append the summary row (runs the Ice Age baseline)
};

struct FrameRecord {
  std::int64_t step = 0;
  std::string file;
  std::uint64_t checksum = 0;
};

struct RunSummary {
  std::int64_t steps = 0;
  std::vector<MetricsRow> rows;
  std::vector<FrameRecord> frames;
  std::int64_t storm_hits = 0;
  std::size_t storm_exits = 0;
  double mean_exit_lat = kNaN;
  std::optional<double> southward_diversion;  // Ice Age only
  double lgm_coverage = kNaN;
  std::size_t nan_resets = 0;
  double mean_step_ms = 0.0;
};

inline constexpr const char* kMetricsHeader = "step,mean_speed,max_divergence,storm_hits,mean_storm_lat,lgm_coverage";

std::string format_metrics_row(const MetricsRow& r);
std::string format_summary_row(const RunSummary& s);

// Runs cfg.steps frames and writes the requested artifacts.
RunSummary run_scenario(const ScenarioConfig& cfg, const RunOptions& opt);

// Exit latitudes of the same scenario on an empty table in Ice Age mode.
std::vector<double> baseline_exit_latitudes(const ScenarioConfig& cfg);

}  // namespace wtt::harness
