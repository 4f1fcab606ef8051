#include "wtt/wtt.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "common/error.hpp"
#include "harness/config.hpp"
#include "harness/protocol.hpp"
#include "harness/runner.hpp"
#include "harness/server.hpp"
#include "harness/session.hpp"

using namespace wtt;
using namespace wtt::harness;

struct wtt_scenario {
  ScenarioConfig cfg;
};

struct wtt_session {
  Session s;
};

struct wtt_server {
  std::unique_ptr<Server> server;
  std::thread thread;
  wtt_status result = WTT_OK;
  std::string error;
  bool joined = false;
};

namespace {

thread_local std::string g_last_error;

wtt_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return WTT_ERR_INVALID_ARGUMENT;
    case ErrorKind::Config: return WTT_ERR_CONFIG;
    case ErrorKind::Io: return WTT_ERR_IO;
    case ErrorKind::Protocol: return WTT_ERR_PROTOCOL;
    case ErrorKind::State: return WTT_ERR_STATE;
  }
  return WTT_ERR_INTERNAL;
}

wtt_status fail(wtt_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
wtt_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return WTT_OK;
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(WTT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(WTT_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::string str_or_empty(const char* p) { return p ? p : ""; }

}  // namespace

extern "C" {

const char* wtt_version(void) { return "1.0.0"; }

const char* wtt_status_string(wtt_status s) {
  switch (s) {
    case WTT_OK: return "ok";
    case WTT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case WTT_ERR_CONFIG: return "configuration error";
    case WTT_ERR_IO: return "i/o error";
    case WTT_ERR_PROTOCOL: return "protocol error";
    case WTT_ERR_STATE: return "invalid state";
    case WTT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* wtt_last_error(void) { return g_last_error.c_str(); }

void wtt_string_free(char* s) { std::free(s); }

wtt_status wtt_scenario_load(const char* path, wtt_scenario** out) {
  if (!path || !out) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] { *out = new wtt_scenario{load_scenario(path)}; });
}

wtt_status wtt_scenario_parse(const char* json_text, const char* base_dir, wtt_scenario** out) {
  if (!json_text || !out) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] { *out = new wtt_scenario{parse_scenario_text(json_text, base_dir ? base_dir : ".")}; });
}

wtt_status wtt_scenario_set_seed(wtt_scenario* sc, uint64_t seed) {
  if (!sc) return fail(WTT_ERR_INVALID_ARGUMENT, "null scenario");
  return guard([&] { sc->cfg.set_seed(seed); });
}

wtt_status wtt_scenario_set_steps(wtt_scenario* sc, int64_t steps) {
  if (!sc) return fail(WTT_ERR_INVALID_ARGUMENT, "null scenario");
  if (steps < 0) return fail(WTT_ERR_INVALID_ARGUMENT, "steps must be >= 0");
  sc->cfg.steps = steps;
  g_last_error.clear();
  return WTT_OK;
}

wtt_status wtt_scenario_set_engine(wtt_scenario* sc, const char* engine) {
  if (!sc || !engine) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { sc->cfg.engine = engine_from_string(engine); });
}

int64_t wtt_scenario_steps(const wtt_scenario* sc) { return sc ? sc->cfg.steps : -1; }

void wtt_scenario_free(wtt_scenario* sc) { delete sc; }

void wtt_run_options_init(wtt_run_options* opt) {
  if (!opt) return;
  *opt = wtt_run_options{};
  opt->every = 0;
  opt->overlay = WTT_OVERLAY_ALL;
  opt->scale = 4;
  opt->summary = 1;
}

wtt_status wtt_run(const wtt_scenario* sc, const wtt_run_options* opt, wtt_run_result* out) {
  if (!sc) return fail(WTT_ERR_INVALID_ARGUMENT, "null scenario");
  return guard([&] {
    RunOptions o;
    if (opt) {
      o.metrics_path = str_or_empty(opt->metrics_path);
      o.frames_dir = str_or_empty(opt->frames_dir);
      o.every = opt->every;
      o.events_path = str_or_empty(opt->events_path);
      o.snapshot_path = str_or_empty(opt->snapshot_path);
      o.overlay = opt->overlay;
      o.scale = opt->scale;
      o.summary = opt->summary != 0;
    }
    const RunSummary r = run_scenario(sc->cfg, o);
    if (out) {
      out->steps = r.steps;
      out->storm_hits = r.storm_hits;
      out->storm_exits = r.storm_exits;
      out->mean_exit_lat = r.mean_exit_lat;
      out->southward_diversion = r.southward_diversion.value_or(std::nan(""));
      out->lgm_coverage = r.lgm_coverage;
      out->nan_resets = r.nan_resets;
      out->mean_step_ms = r.mean_step_ms;
    }
  });
}

wtt_status wtt_session_create(const wtt_scenario* sc, wtt_session** out) {
  if (!sc || !out) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] { *out = new wtt_session{Session(sc->cfg)}; });
}

wtt_status wtt_session_step(wtt_session* s, int64_t n) {
  if (!s) return fail(WTT_ERR_INVALID_ARGUMENT, "null session");
  if (n < 0) return fail(WTT_ERR_INVALID_ARGUMENT, "step count must be >= 0");
  return guard([&] {
    for (int64_t k = 0; k < n; ++k) s->s.step();
  });
}

wtt_status wtt_session_command(wtt_session* s, const char* json_line) {
  if (!s || !json_line) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    Command c = parse_command(json_line);
    if (auto* l = std::get_if<LayoutCommand>(&c)) s->s.set_layout(std::move(l->blocks));
    else if (auto* m = std::get_if<ModeCommand>(&c)) s->s.set_mode(m->mode, m->seed);
  });
}

wtt_status wtt_session_frame_json(const wtt_session* s, char** out) {
  if (!s || !out) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] { *out = dup_string(frame_message(s->s, {}).dump()); });
}

wtt_status wtt_session_snapshot(const wtt_session* s, const char* path) {
  if (!s || !path) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, std::string("cannot write '") + path + "'");
    f << snapshot_document(s->s).dump() << "\n";
    if (!f.flush()) throw Error(ErrorKind::Io, std::string("failed writing '") + path + "'");
  });
}

wtt_status wtt_session_export_frame(const wtt_session* s, unsigned overlay, int scale, const char* path,
                                    uint64_t* checksum) {
  if (!s || !path) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    const Image img = render_frame(frame_view(s->s), overlay, scale);
    write_png(path, img);
    if (checksum) *checksum = img.checksum();
  });
}

wtt_status wtt_session_probe(const wtt_session* s, double x, double y, double* vx, double* vy) {
  if (!s || !vx || !vy) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  if (!std::isfinite(x) || !std::isfinite(y)) return fail(WTT_ERR_INVALID_ARGUMENT, "probe position must be finite");
  return guard([&] {
    const Vec2 v = s->s.velocity_at({x, y});
    *vx = v.x;
    *vy = v.y;
  });
}

wtt_status wtt_session_metrics(const wtt_session* s, wtt_metrics* out) {
  if (!s || !out) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    const MetricsRow r = s->s.metrics();
    *out = wtt_metrics{r.step, r.mean_speed, r.max_divergence, r.storm_hits, r.mean_storm_lat, r.lgm_coverage};
  });
}

uint64_t wtt_session_obstacle_digest(const wtt_session* s) { return s ? s->s.obstacles().digest() : 0; }

void wtt_session_free(wtt_session* s) { delete s; }

wtt_status wtt_server_start(const wtt_scenario* sc, const char* host, int port, int64_t max_frames,
                            wtt_server** out) {
  if (!sc || !out) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  if (port < 0 || port > 65535) return fail(WTT_ERR_INVALID_ARGUMENT, "port must be in [0, 65535]");
  *out = nullptr;
  return guard([&] {
    ServerOptions o;
    o.port = port;
    if (host && *host) o.host = host;
    o.max_frames = max_frames;
    auto srv = std::make_unique<wtt_server>();
    srv->server = std::make_unique<Server>(sc->cfg, o);
    wtt_server* raw = srv.get();
    raw->thread = std::thread([raw] {
      raw->result = guard([raw] { raw->server->run(); });
      if (raw->result != WTT_OK) raw->error = g_last_error;
    });
    *out = srv.release();
  });
}

int wtt_server_port(const wtt_server* srv) { return srv ? srv->server->port() : -1; }

wtt_status wtt_server_wait(wtt_server* srv) {
  if (!srv) return fail(WTT_ERR_INVALID_ARGUMENT, "null server");
  if (!srv->joined) {
    srv->thread.join();
    srv->joined = true;
  }
  if (srv->result != WTT_OK) return fail(srv->result, srv->error);
  g_last_error.clear();
  return WTT_OK;
}

void wtt_server_stop(wtt_server* srv) {
  if (srv) srv->server->stop();
}

void wtt_server_free(wtt_server* srv) {
  if (!srv) return;
  if (!srv->joined) {
    srv->server->stop();
    srv->thread.join();
  }
  delete srv;
}

wtt_status wtt_render_snapshot(const char* snapshot_path, const char* out_png, unsigned overlay, int scale,
                               uint64_t* checksum) {
  if (!snapshot_path || !out_png) return fail(WTT_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    std::ifstream in(snapshot_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, std::string("cannot open snapshot '") + snapshot_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorKind::Protocol, std::string("snapshot '") + snapshot_path + "' is not valid JSON");
    }
    const Image img = render_frame(frame_view_from_snapshot(doc), overlay, scale);
    write_png(out_png, img);
    if (checksum) *checksum = img.checksum();
  });
}

}  // extern "C"
