// Command-line front end; everything goes through the C API.
#include <csignal>
#include <cmath>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "wtt/wtt.h"

namespace {

wtt_server* g_server = nullptr;

void on_signal(int) {
  if (g_server) wtt_server_stop(g_server);
}

int report(wtt_status s) {
  std::fprintf(stderr, "wtt: %s: %s\n", wtt_status_string(s), wtt_last_error());
  return s == WTT_ERR_CONFIG || s == WTT_ERR_INVALID_ARGUMENT ? 2 : 1;
}

struct ScenarioHandle {
  wtt_scenario* p = nullptr;
  ~ScenarioHandle() { wtt_scenario_free(p); }
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char b[32];
  std::snprintf(b, sizeof b, "%.4f", v);
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Winds Through Time exhibit simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(wtt_version()));

  std::string config, metrics, frames, events, snapshot, engine, out, host = "127.0.0.1";
  std::int64_t steps = -1, max_frames = 0;
  std::uint64_t seed = 0;
  int every = 0, port = 8765, scale = 4;
  unsigned overlay = WTT_OVERLAY_ALL;
  bool no_summary = false;

  auto* run = app.add_subcommand("run", "Run a scenario headless and write artifacts");
  run->add_option("--config", config, "Scenario JSON")->required();
  auto* steps_opt = run->add_option("--steps", steps, "Override the step count")->check(CLI::NonNegativeNumber);
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--metrics", metrics, "Metrics CSV output");
  auto* frames_opt = run->add_option("--frames", frames, "Directory for PNG frames");
  run->add_option("--every", every, "Frame interval in steps")->check(CLI::PositiveNumber)->needs(frames_opt);
  auto* engine_opt = run->add_option("--engine", engine, "cfd or repulse")->check(CLI::IsMember({"cfd", "repulse"}));
  run->add_option("--events", events, "Event log output (JSON lines)");
  run->add_option("--snapshot", snapshot, "Final snapshot JSON output");
  run->add_option("--scale", scale, "Pixels per cell in frames")->check(CLI::PositiveNumber);
  run->add_option("--overlay", overlay, "Overlay bit mask: 1 outline, 2 markers, 4 storms")->check(CLI::Range(0u, 7u));
  run->add_flag("--no-summary", no_summary, "Skip the summary row and its baseline run");

  auto* serve = app.add_subcommand("serve", "Serve the live session protocol");
  serve->add_option("--config", config, "Scenario JSON")->required();
  serve->add_option("--port", port, "TCP port, 0 for any free port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--max-frames", max_frames, "Exit after publishing this many frames")->check(CLI::NonNegativeNumber);
  auto* serve_seed = serve->add_option("--seed", seed, "Override the scenario seed");
  auto* serve_engine = serve->add_option("--engine", engine, "cfd or repulse")->check(CLI::IsMember({"cfd", "repulse"}));

  auto* render = app.add_subcommand("render", "Render a snapshot to PNG");
  render->add_option("--snapshot", snapshot, "Snapshot JSON")->required();
  render->add_option("--out", out, "PNG output")->required();
  render->add_option("--scale", scale, "Pixels per cell")->check(CLI::PositiveNumber);
  render->add_option("--overlay", overlay, "Overlay bit mask")->check(CLI::Range(0u, 7u));

  CLI11_PARSE(app, argc, argv);

  if (*render) {
    std::uint64_t sum = 0;
    const wtt_status s = wtt_render_snapshot(snapshot.c_str(), out.c_str(), overlay, scale, &sum);
    if (s != WTT_OK) return report(s);
    std::printf("%s %016llx\n", out.c_str(), static_cast<unsigned long long>(sum));
    return 0;
  }

  ScenarioHandle sc;
  if (wtt_status s = wtt_scenario_load(config.c_str(), &sc.p); s != WTT_OK) return report(s);
  const bool seed_given = (*run && seed_opt->count()) || (*serve && serve_seed->count());
  const bool engine_given = (*run && engine_opt->count()) || (*serve && serve_engine->count());
  if (seed_given)
    if (wtt_status s = wtt_scenario_set_seed(sc.p, seed); s != WTT_OK) return report(s);
  if (engine_given)
    if (wtt_status s = wtt_scenario_set_engine(sc.p, engine.c_str()); s != WTT_OK) return report(s);

  if (*run) {
    if (steps_opt->count())
      if (wtt_status s = wtt_scenario_set_steps(sc.p, steps); s != WTT_OK) return report(s);
    if (!frames.empty() && every == 0) every = 1;
    wtt_run_options opt;
    wtt_run_options_init(&opt);
    opt.metrics_path = metrics.c_str();
    opt.frames_dir = frames.c_str();
    opt.every = every;
    opt.events_path = events.c_str();
    opt.snapshot_path = snapshot.c_str();
    opt.overlay = overlay;
    opt.scale = scale;
    opt.summary = no_summary ? 0 : 1;
    wtt_run_result r{};
    if (wtt_status s = wtt_run(sc.p, &opt, &r); s != WTT_OK) return report(s);
    std::printf("steps=%lld storm_hits=%lld storm_exits=%llu southward_diversion=%s lgm_coverage=%s "
                "nan_resets=%llu mean_step_ms=%.3f\n",
                static_cast<long long>(r.steps), static_cast<long long>(r.storm_hits),
                static_cast<unsigned long long>(r.storm_exits), fmt(r.southward_diversion).c_str(),
                fmt(r.lgm_coverage).c_str(), static_cast<unsigned long long>(r.nan_resets), r.mean_step_ms);
    return 0;
  }

  if (wtt_status s = wtt_server_start(sc.p, host.c_str(), port, max_frames, &g_server); s != WTT_OK) return report(s);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on %s:%d\n", host.c_str(), wtt_server_port(g_server));
  std::fflush(stdout);
  const wtt_status s = wtt_server_wait(g_server);
  wtt_server* srv = g_server;
  g_server = nullptr;
  wtt_server_free(srv);
  return s == WTT_OK ? 0 : report(s);
}
