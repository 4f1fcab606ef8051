#include "harness/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "common/error.hpp"
#include "harness/protocol.hpp"

namespace wtt::harness {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string json_escape(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
  return std::to_string(r.step) + "," + num(r.mean_speed) + "," + num(r.max_divergence) + "," +
         std::to_string(r.storm_hits) + "," + num(r.mean_storm_lat) + "," + num(r.lgm_coverage);
}

std::string format_summary_row(const RunSummary& s) {
  return "# summary,steps=" + std::to_string(s.steps) + ",storm_hits=" + std::to_string(s.storm_hits) +
         ",storm_exits=" + std::to_string(s.storm_exits) + ",mean_exit_lat=" + num(s.mean_exit_lat) +
         ",southward_diversion=" + num(s.southward_diversion.value_or(kNaN)) + ",lgm_coverage=" + num(s.lgm_coverage) +
         ",nan_resets=" + std::to_string(s.nan_resets);
}

std::vector<double> baseline_exit_latitudes(const ScenarioConfig& cfg) {
  ScenarioConfig base = cfg;
  base.layout = std::vector<terrain::BlockSpec>{};
  base.random_blocks.reset();
  base.depth_frames.reset();
  base.mode = modes::Mode::IceAge;
  Session s(base);
  for (std::int64_t k = 0; k < base.steps; ++k) s.step();
  return s.exit_latitudes();
}

RunSummary run_scenario(const ScenarioConfig& cfg, const RunOptions& opt) {
  if (!opt.frames_dir.empty() && opt.every < 1) throw Error(ErrorKind::InvalidArgument, "--every must be >= 1");
  std::ofstream metrics, events, checksums;
  if (!opt.metrics_path.empty()) {
    metrics = open_out(opt.metrics_path);
    metrics << kMetricsHeader << "\n";
  }
  if (!opt.events_path.empty()) events = open_out(opt.events_path);
  if (!opt.frames_dir.empty()) {
    std::error_code ec;
    fs::create_directories(opt.frames_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create frames directory '" + opt.frames_dir + "'");
    checksums = open_out((fs::path(opt.frames_dir) / "checksums.txt").string());
  }

  Session s(cfg);
  RunSummary sum;
  std::size_t flushed = 0;
  auto flush_events = [&] {
    const auto& ev = s.events().events();
    if (events.is_open())
      for (; flushed < ev.size(); ++flushed)
        events << "{\"step\":" << ev[flushed].step << ",\"kind\":" << json_escape(ev[flushed].kind)
               << ",\"detail\":" << json_escape(ev[flushed].detail) << "}\n";
  };
  flush_events();

  double step_seconds = 0.0;
  for (std::int64_t k = 0; k < cfg.steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    s.step();
    step_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::int64_t step = s.step_count();
    if (step % cfg.metrics_every == 0) {
      sum.rows.push_back(s.metrics());
      if (metrics.is_open()) metrics << format_metrics_row(sum.rows.back()) << "\n";
    }
    if (!opt.frames_dir.empty() && step % opt.every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%06lld.png", static_cast<long long>(step));
      const Image img = render_frame(frame_view(s), opt.overlay, opt.scale);
      write_png((fs::path(opt.frames_dir) / name).string(), img);
      sum.frames.push_back({step, name, img.checksum()});
      checksums << name << " " << hex64(img.checksum()) << "\n";
    }
    flush_events();
  }

  sum.steps = s.step_count();
  sum.storm_hits = s.storms().hits();
  const auto lats = s.exit_latitudes();
  sum.storm_exits = lats.size();
  sum.mean_exit_lat = mean(lats);
  sum.lgm_coverage = s.lgm_coverage();
  sum.nan_resets = s.events().count("nan_reset");
  sum.mean_step_ms = cfg.steps > 0 ? 1e3 * step_seconds / static_cast<double>(cfg.steps) : 0.0;
  if (opt.summary && cfg.steps > 0 && s.mode().mode == modes::Mode::IceAge)
    sum.southward_diversion = modes::southward_diversion(baseline_exit_latitudes(cfg), lats);

  if (metrics.is_open() && opt.summary && cfg.steps > 0) metrics << format_summary_row(sum) << "\n";
  if (!opt.snapshot_path.empty()) open_out(opt.snapshot_path) << snapshot_document(s).dump() << "\n";
  for (auto* f : {&metrics, &events, &checksums})
    if (f->is_open() && !f->flush()) throw Error(ErrorKind::Io, "failed writing run output");
  return sum;
}

}  // namespace wtt::harness
