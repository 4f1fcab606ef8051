#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>

#include <json.hpp>

#include <wtt/wtt.h>

extern "C" int wtt_c_header_smoke(void);

namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "seed": 2, "steps": 40, "grid": {"nx": 32, "ny": 18},
  "seeding": {"n_particles": 200, "n_storms": 2},
  "mode": {"mode": "ice_age"},
  "layout": {"blocks": [{"class": "ice", "x": 16, "y": 12}]}
})";

std::string tmp(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "wtt_capi_test";
  fs::create_directories(d);
  return (d / name).string();
}

struct Scenario {
  wtt_scenario* p = nullptr;
  explicit Scenario(const char* text) { REQUIRE(wtt_scenario_parse(text, nullptr, &p) == WTT_OK); }
  ~Scenario() { wtt_scenario_free(p); }
};

}  // namespace

TEST_CASE("header compiles as C") { CHECK(wtt_c_header_smoke() == 0); }

TEST_CASE("status strings and version") {
  CHECK(std::string(wtt_version()).size() > 0);
  CHECK(std::string(wtt_status_string(WTT_OK)) == "ok");
  CHECK(std::string(wtt_status_string(WTT_ERR_CONFIG)).size() > 0);
}

TEST_CASE("config errors come back as codes with a field path") {
  wtt_scenario* sc = nullptr;
  CHECK(wtt_scenario_parse(R"({"layout": {"blocks": []}, "grid": {"nx": -3}})", nullptr, &sc) == WTT_ERR_CONFIG);
  CHECK(sc == nullptr);
  CHECK(std::string(wtt_last_error()).find("grid.nx") != std::string::npos);
  CHECK(wtt_scenario_load("/no/such/file.json", &sc) != WTT_OK);
  CHECK(wtt_scenario_parse(nullptr, nullptr, &sc) == WTT_ERR_INVALID_ARGUMENT);
  CHECK(wtt_scenario_parse(kSmall, nullptr, nullptr) == WTT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("null handles are rejected, not dereferenced") {
  CHECK(wtt_session_step(nullptr, 1) == WTT_ERR_INVALID_ARGUMENT);
  CHECK(wtt_session_command(nullptr, "{}") == WTT_ERR_INVALID_ARGUMENT);
  CHECK(wtt_scenario_set_seed(nullptr, 1) == WTT_ERR_INVALID_ARGUMENT);
  wtt_scenario_free(nullptr);
  wtt_session_free(nullptr);
  wtt_server_free(nullptr);
  wtt_string_free(nullptr);
}

TEST_CASE("run writes artifacts and reports a summary") {
  Scenario sc(kSmall);
  CHECK(wtt_scenario_steps(sc.p) == 40);
  CHECK(wtt_scenario_set_steps(sc.p, 30) == WTT_OK);
  CHECK(wtt_scenario_set_engine(sc.p, "spectral") == WTT_ERR_CONFIG);
  wtt_run_options o;
  wtt_run_options_init(&o);
  const std::string csv = tmp("run.csv");
  o.metrics_path = csv.c_str();
  wtt_run_result r{};
  REQUIRE(wtt_run(sc.p, &o, &r) == WTT_OK);
  CHECK(r.steps == 30);
  CHECK(r.nan_resets == 0);
  CHECK(r.lgm_coverage >= 0.0);
  CHECK(fs::file_size(csv) > 0);

  o.metrics_path = "/nonexistent_dir_wtt/run.csv";
  CHECK(wtt_run(sc.p, &o, &r) == WTT_ERR_IO);
  CHECK(std::string(wtt_last_error()).find("/nonexistent_dir_wtt/run.csv") != std::string::npos);
}

TEST_CASE("session lifecycle") {
  Scenario sc(kSmall);
  wtt_session* s = nullptr;
  REQUIRE(wtt_session_create(sc.p, &s) == WTT_OK);
  CHECK(wtt_session_step(s, 10) == WTT_OK);
  CHECK(wtt_session_step(s, -1) == WTT_ERR_INVALID_ARGUMENT);

  wtt_metrics m{};
  REQUIRE(wtt_session_metrics(s, &m) == WTT_OK);
  CHECK(m.step == 10);
  CHECK(m.mean_speed > 0.0);
  CHECK(std::isfinite(m.max_divergence));

  double vx = 0, vy = 0;
  CHECK(wtt_session_probe(s, 2.5, 4.5, &vx, &vy) == WTT_OK);
  CHECK(std::isfinite(vx));

  const std::uint64_t d0 = wtt_session_obstacle_digest(s);
  CHECK(wtt_session_command(s, R"({"t":"layout","blocks":[]})") == WTT_OK);
  CHECK(wtt_session_obstacle_digest(s) != d0);
  CHECK(wtt_session_command(s, R"({"t":"layout"})") == WTT_ERR_PROTOCOL);
  CHECK(wtt_session_command(s, R"({"t":"mode","mode":"moving_mountains","seed":4})") == WTT_OK);

  char* frame = nullptr;
  REQUIRE(wtt_session_frame_json(s, &frame) == WTT_OK);
  const auto j = nlohmann::json::parse(frame);
  wtt_string_free(frame);
  CHECK(j["t"] == "frame");
  CHECK(j["mode"] == "moving_mountains");
  CHECK(j["step"] == 10);

  const std::string snap = tmp("snap.json"), png_a = tmp("a.png"), png_b = tmp("b.png");
  std::uint64_t ca = 0, cb = 0;
  REQUIRE(wtt_session_snapshot(s, snap.c_str()) == WTT_OK);
  REQUIRE(wtt_session_export_frame(s, WTT_OVERLAY_ALL, 3, png_a.c_str(), &ca) == WTT_OK);
  REQUIRE(wtt_render_snapshot(snap.c_str(), png_b.c_str(), WTT_OVERLAY_ALL, 3, &cb) == WTT_OK);
  CHECK(ca == cb);
  CHECK(wtt_render_snapshot("/no/such/snap.json", png_b.c_str(), WTT_OVERLAY_ALL, 3, &cb) == WTT_ERR_IO);
  wtt_session_free(s);
}

TEST_CASE("server start, wait and stop") {
  Scenario sc(kSmall);
  wtt_server* srv = nullptr;
  REQUIRE(wtt_server_start(sc.p, "127.0.0.1", 0, 3, &srv) == WTT_OK);
  CHECK(wtt_server_port(srv) > 0);
  CHECK(wtt_server_wait(srv) == WTT_OK);
  wtt_server_free(srv);

  REQUIRE(wtt_server_start(sc.p, "127.0.0.1", 0, 0, &srv) == WTT_OK);
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  wtt_server_stop(srv);
  CHECK(wtt_server_wait(srv) == WTT_OK);
  wtt_server_free(srv);

  CHECK(wtt_server_start(sc.p, "not-an-address", 0, 0, &srv) != WTT_OK);
}
