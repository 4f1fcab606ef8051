#ifndef WTT_WTT_H
#define WTT_WTT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define WTT_API __attribute__((visibility("default")))
#else
#define WTT_API
#endif

typedef struct wtt_scenario wtt_scenario;
typedef struct wtt_session wtt_session;
typedef struct wtt_server wtt_server;

typedef enum wtt_status {
  WTT_OK = 0,
  WTT_ERR_INVALID_ARGUMENT = 1,
  WTT_ERR_CONFIG = 2,
  WTT_ERR_IO = 3,
  WTT_ERR_PROTOCOL = 4,
  WTT_ERR_STATE = 5,
  WTT_ERR_INTERNAL = 6
} wtt_status;

/* Overlay flags for frame images. */
#define WTT_OVERLAY_OUTLINE 1u
#define WTT_OVERLAY_MARKERS 2u
#define WTT_OVERLAY_STORMS 4u
#define WTT_OVERLAY_ALL 7u

WTT_API const char* wtt_version(void);
WTT_API const char* wtt_status_string(wtt_status s);
/* Message of the last failed call on this thread; "" when none. Config
   errors start with the dotted field path. */
WTT_API const char* wtt_last_error(void);
/* Frees strings returned through char** out parameters. */
WTT_API void wtt_string_free(char* s);

/* Scenarios. Relative paths inside the document resolve against base_dir
   (or the file's directory for wtt_scenario_load). */
WTT_API wtt_status wtt_scenario_load(const char* path, wtt_scenario** out);
WTT_API wtt_status wtt_scenario_parse(const char* json_text, const char* base_dir, wtt_scenario** out);
WTT_API wtt_status wtt_scenario_set_seed(wtt_scenario* sc, uint64_t seed);
WTT_API wtt_status wtt_scenario_set_steps(wtt_scenario* sc, int64_t steps);
/* "cfd" or "repulse" */
WTT_API wtt_status wtt_scenario_set_engine(wtt_scenario* sc, const char* engine);
WTT_API int64_t wtt_scenario_steps(const wtt_scenario* sc);
WTT_API void wtt_scenario_free(wtt_scenario* sc);

/* Batch runs. Null or empty paths skip that artifact. */
typedef struct wtt_run_options {
  const char* metrics_path;
  const char* frames_dir;
  int every;
  const char* events_path;
  const char* snapshot_path;
  unsigned overlay;
  int scale;
  int summary;
} wtt_run_options;

typedef struct wtt_run_result {
  int64_t steps;
  int64_t storm_hits;
  uint64_t storm_exits;
  double mean_exit_lat;
  double southward_diversion; /* NaN when undefined */
  double lgm_coverage;        /* NaN outside Ice Age */
  uint64_t nan_resets;
  double mean_step_ms;
} wtt_run_result;

WTT_API void wtt_run_options_init(wtt_run_options* opt);
WTT_API wtt_status wtt_run(const wtt_scenario* sc, const wtt_run_options* opt, wtt_run_result* out);

/* Interactive sessions. */
typedef struct wtt_metrics {
  int64_t step;
  double mean_speed;
  double max_divergence;
  int64_t storm_hits;
  double mean_storm_lat;
  double lgm_coverage;
} wtt_metrics;

WTT_API wtt_status wtt_session_create(const wtt_scenario* sc, wtt_session** out);
WTT_API wtt_status wtt_session_step(wtt_session* s, int64_t n);
/* One protocol command line ({"t":"layout",..} or {"t":"mode",..}). */
WTT_API wtt_status wtt_session_command(wtt_session* s, const char* json_line);
WTT_API wtt_status wtt_session_frame_json(const wtt_session* s, char** out);
WTT_API wtt_status wtt_session_snapshot(const wtt_session* s, const char* path);
WTT_API wtt_status wtt_session_export_frame(const wtt_session* s, unsigned overlay, int scale, const char* path,
                                            uint64_t* checksum);
/* Engine velocity in cells per step at map coordinates (cells). */
WTT_API wtt_status wtt_session_probe(const wtt_session* s, double x, double y, double* vx, double* vy);
WTT_API wtt_status wtt_session_metrics(const wtt_session* s, wtt_metrics* out);
WTT_API uint64_t wtt_session_obstacle_digest(const wtt_session* s);
WTT_API void wtt_session_free(wtt_session* s);

/* Server on a background thread. port 0 picks a free port; max_frames 0
   runs until stopped. */
WTT_API wtt_status wtt_server_start(const wtt_scenario* sc, const char* host, int port, int64_t max_frames,
                                    wtt_server** out);
WTT_API int wtt_server_port(const wtt_server* srv);
/* Blocks until the loop ends; returns its failure, if any. */
WTT_API wtt_status wtt_server_wait(wtt_server* srv);
/* Async-signal-safe. */
WTT_API void wtt_server_stop(wtt_server* srv);
WTT_API void wtt_server_free(wtt_server* srv);

WTT_API wtt_status wtt_render_snapshot(const char* snapshot_path, const char* out_png, unsigned overlay, int scale,
                                       uint64_t* checksum);

#ifdef __cplusplus
}
#endif

#endif
