// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dense_projection.hpp"
#include "harness/config.hpp"
#include "harness/runner.hpp"
#include "harness/session.hpp"
#include "particles/particles.hpp"
#include "repulse/repulse.hpp"
#include "terrain/terrain.hpp"
#include "windsim/windsim.hpp"

using namespace wtt;
using namespace wtt::harness;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kDivergenceFraction = 1e-3;   // of inflow_speed per cell
constexpr int kReferenceSteps = 2000;
constexpr int kReferenceParticles = 5000;
constexpr int kCoriolisSteps = 100;
constexpr double kDiversionFraction = 0.05;    // of the domain's latitude span
constexpr double kFadeRelTol = 1e-6;
constexpr double kFadeAt10 = 0.35;
constexpr double kFadeAt44 = 0.01;
constexpr int kMeanderSteps = 2000;
constexpr int kMinSignChanges = 3;
constexpr double kSignBand = 1e-3;             // of inflow_speed; smaller |v| keeps the previous sign
constexpr double kFrameBudgetMs = 16.0;
constexpr double kOracleResidual = 1e-10;
constexpr double kOracleVelocityTol = 1e-6;
constexpr int kOracleIters = 500;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string scenario_path(const std::string& name) { return std::string(WTT_SCENARIO_DIR) + "/" + name; }

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / ("wtt_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int tracers_in_solid(const Session& s) {
  int n = 0;
  for (const auto& p : s.tracers()) {
    const int i = static_cast<int>(std::floor(p.pos.x)), j = static_cast<int>(std::floor(p.pos.y));
    if (s.solid().in_bounds(i, j) && s.solid()(i, j)) ++n;
  }
  return n;
}

// Criteria 1, 2 and 9 share one reference run.
struct ReferenceRun {
  double max_div = 0.0;          // m/s per cell
  double div_limit = 0.0;
  std::int64_t worst_step = 0;
  std::int64_t in_solid = 0;
  std::int64_t particle_steps = 0;
  double mean_ms = 0.0;
  double total_s = 0.0;
  std::size_t resets = 0;
};

ReferenceRun reference_run() {
  ScenarioConfig cfg = load_scenario(scenario_path("reference.json"));
  cfg.seeding.n_particles = kReferenceParticles;
  ReferenceRun r;
  r.div_limit = kDivergenceFraction * cfg.sim.inflow_speed;
  Session s(cfg);
  r.in_solid += tracers_in_solid(s);
  double step_s = 0.0;
  const auto t0 = Clock::now();
  for (int k = 0; k < kReferenceSteps; ++k) {
    const auto a = Clock::now();
    s.step();
    step_s += std::chrono::duration<double>(Clock::now() - a).count();
    const double d = windsim::max_divergence(s.flow());
    if (!(d <= r.max_div)) {
      r.max_div = d;
      r.worst_step = s.step_count();
    }
    r.in_solid += tracers_in_solid(s);
    r.particle_steps += static_cast<std::int64_t>(s.tracers().size());
  }
  r.total_s = std::chrono::duration<double>(Clock::now() - t0).count();
  r.mean_ms = 1e3 * step_s / kReferenceSteps;
  r.resets = s.events().count("nan_reset");
  return r;
}

Outcome divergence(const ReferenceRun& r) {
  return {r.max_div <= r.div_limit,
          fmt("max |div u| %.3e m/s per cell (step %lld) <= %.3e over %d steps, %.1f s", r.max_div,
              static_cast<long long>(r.worst_step), r.div_limit, kReferenceSteps, r.total_s)};
}

Outcome impermeability(const ReferenceRun& r) {
  return {r.in_solid == 0 && r.particle_steps == static_cast<std::int64_t>(kReferenceParticles) * kReferenceSteps,
          fmt("%lld tracer-in-solid occurrences over %lld particle steps", static_cast<long long>(r.in_solid),
              static_cast<long long>(r.particle_steps))};
}

Outcome performance(const ReferenceRun& r) {
  return {r.mean_ms <= kFrameBudgetMs, fmt("mean frame time %.2f ms <= %.1f ms (192x108, %d particles, 1 core)",
                                           r.mean_ms, kFrameBudgetMs, kReferenceParticles)};
}

Outcome coriolis() {
  std::string detail;
  bool ok = true;
  for (double sign : {1.0, -1.0}) {
    windsim::GridSpec g;
    windsim::SimParams p;
    p.boundary = windsim::Boundary::Open;
    p.beta = 0.0;
    p.f0 = sign * std::abs(p.f0);
    p.viscosity = 0.0;
    p.drag_low = 0.0;
    const terrain::ObstacleField obs{Field2D<double>(g.nx, g.ny, 0.0), Field2D<double>(g.nx, g.ny, 0.0)};
    windsim::FlowSolver solver(g, p);
    windsim::FlowState s = windsim::make_state(g);
    s.u.fill(p.inflow_speed);
    const double k = windsim::physical_dt(g, p) / g.cell_m();
    const particles::Mover move = particles::rk2_mover([&](Vec2 q) { return windsim::probe(s, q.x, q.y) * k; });
    Vec2 pos{0.25 * g.nx, 0.5 * g.ny}, vel;
    Vec2 prev_dir;
    int monotone = 0;
    double total_turn = 0.0;
    for (int n = 0; n < kCoriolisSteps; ++n) {
      solver.step(s, obs);
      const Vec2 next = move(pos, vel, 1.0);
      const Vec2 dir = next - pos;
      pos = next;
      if (n > 0) {
        const double turn = turn_angle(prev_dir, dir);
        total_turn += turn;
        if (sign * turn < 0.0) ++monotone;
      }
      prev_dir = dir;
    }
    const bool this_ok = monotone == kCoriolisSteps - 1;
    ok = ok && this_ok;
    detail += fmt("%sf%s0: %d/%d headings %s, net turn %.2f rad", detail.empty() ? "" : "; ", sign > 0 ? ">" : "<",
                  monotone, kCoriolisSteps - 1, sign > 0 ? "decreasing" : "increasing", total_turn);
  }
  return {ok, detail};
}

ScenarioConfig mirrored(const ScenarioConfig& c) {
  ScenarioConfig m = c;
  for (auto& b : *m.layout) {
    b.center.y = c.grid.ny - b.center.y;
    b.rotation = -b.rotation;
  }
  return m;
}

Outcome diversion() {
  const ScenarioConfig cfg = load_scenario(scenario_path("ice_age.json"));
  const double threshold = kDiversionFraction * (cfg.grid.lat_north - cfg.grid.lat_south);
  RunOptions opt;
  const RunSummary lgm = run_scenario(cfg, opt);
  const RunSummary mir = run_scenario(mirrored(cfg), opt);
  const double d = lgm.southward_diversion.value_or(kNaN), dm = mir.southward_diversion.value_or(kNaN);
  return {d >= threshold && dm < 0.0,
          fmt("LGM layout %.2f deg south of baseline (>= %.2f), mirrored wall %.2f deg (< 0), %zu and %zu exits", d,
              threshold, dm, lgm.storm_exits, mir.storm_exits)};
}

Outcome trail_decay() {
  particles::SeedingPolicy policy;
  particles::TrailField t(1, 1, 1.0);
  const particles::ParticleSet none;
  double worst = 0.0, at10 = 0.0, at44 = 0.0;
  for (int k = 1; k <= 100; ++k) {
    particles::deposit_and_fade(t, none, policy.trail_fade, policy.deposit);
    const double want = std::pow(0.9, k);
    worst = std::max(worst, std::abs(t(0, 0) - want) / want);
    if (k == 10) at10 = t(0, 0);
    if (k == 44) at44 = t(0, 0);
  }
  return {policy.trail_fade == 0.1 && worst <= kFadeRelTol && at10 < kFadeAt10 && at44 < kFadeAt44,
          fmt("max rel error vs 0.9^k %.1e <= %.0e, I(10) = %.4f < %.2f, I(44) = %.5f < %.2f", worst, kFadeRelTol,
              at10, kFadeAt10, at44, kFadeAt44)};
}

// Total angle swept by (pos - c).
double winding_number(const std::vector<Vec2>& path, Vec2 c) {
  double total = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) total += turn_angle(path[k - 1] - c, path[k] - c);
  return std::trunc(total / (2.0 * std::numbers::pi));
}

Outcome repulse_model() {
  const repulse::RepulseParams p;
  const terrain::ClassHeights heights;
  const double h = heights.low;
  const int nx = 120, ny = 60;
  auto field = [&](double height) {
    terrain::HeightField f(nx, ny, 0.0);
    for (int j = 24; j < 30; ++j)
      for (int i = 50; i < 62; ++i) f(i, j) = height;
    return f;
  };
  auto path = [&](const terrain::HeightField& f, double y0) {
    repulse::Walker w{{2.0, y0}, {p.base_speed, 0.0}};
    std::vector<Vec2> out{w.pos};
    while (w.pos.x < nx - 1 && out.size() < 2000) {
      w = repulse::step_particle_repulsive(w, f, p);
      out.push_back(w.pos);
    }
    return out;
  };
  // A path grazing the north face of the wall.
  const double y0 = 31.0;
  double prev = 0.0;
  bool strict = true;
  std::string defl;
  for (int m = 1; m <= 3; ++m) {
    const auto t = path(field(m * h), y0);
    double d = 0.0;
    for (Vec2 q : t) d = std::max(d, q.y - y0);
    strict = strict && d > prev;
    defl += fmt("%s%.3f", m == 1 ? "" : "/", d);
    prev = d;
  }
  int nonzero = 0, paths = 0;
  const terrain::HeightField tall = field(heights.ice);
  for (double y = 4.0; y < ny - 4; y += 1.0, ++paths)
    if (winding_number(path(tall, y), {56.0, 27.0}) != 0.0) ++nonzero;
  return {strict && nonzero == 0,
          fmt("deflection for h/2h/3h (h = %.0f mm) %s cells, strictly increasing; winding != 0 on %d of %d paths",
              h, defl.c_str(), nonzero, paths)};
}

int sign_changes(const std::vector<double>& v, double band) {
  int changes = 0, last = 0;
  for (double x : v) {
    const int s = x > band ? 1 : (x < -band ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

Outcome meander_contrast() {
  ScenarioConfig cfg = parse_scenario_text(R"({
    "seed": 11, "grid": {"nx": 192, "ny": 108},
    "mode": {"mode": "ice_age"},
    "layout": {"blocks": [{"class": "ice", "x": 66, "y": 54, "rot": 0, "w": 12, "h": 20}]}
  })");
  if (!(cfg.sim.beta > 0.0)) return {false, "beta must be positive"};
  // 20 cells downstream of the block's east face, on its centre row.
  const terrain::BlockSpec& block = cfg.layout->front();
  const Vec2 probe{block.center.x + 0.5 * block.width + 20.0, block.center.y};
  auto series = [&](Engine e) {
    ScenarioConfig c = cfg;
    c.engine = e;
    Session s(c);
    std::vector<double> v;
    for (int k = 0; k < kMeanderSteps; ++k) {
      s.step();
      v.push_back(s.velocity_at(probe).y / s.cells_per_mps());
    }
    return v;
  };
  const double band = kSignBand * cfg.sim.inflow_speed;
  const std::vector<double> cfd = series(Engine::Cfd);
  const std::vector<double> rep = series(Engine::Repulse);
  const int cfd_changes = sign_changes(cfd, band);
  const int rep_changes = sign_changes(rep, 0.0);
  const bool rising = std::is_sorted(rep.begin(), rep.end());
  const bool falling = std::is_sorted(rep.rbegin(), rep.rend());
  const auto [lo, hi] = std::minmax_element(cfd.begin(), cfd.end());
  return {cfd_changes >= kMinSignChanges && rep_changes == 0 && (rising || falling),
          fmt("CFD probe (%.0f, %.0f) v: %d sign changes (>= %d, band %.0e m/s), range [%.2f, %.2f] m/s; repulse: %d changes, %s",
              probe.x, probe.y, cfd_changes, kMinSignChanges, band, *lo, *hi, rep_changes,
              rising || falling ? "monotone" : "not monotone")};
}

Outcome determinism() {
  const fs::path dir = scratch_dir();
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(WTT_SCENARIO_DIR)) {
    if (e.path().extension() != ".json") continue;
    const std::string text = slurp(e.path());
    if (text.find("\"steps\"") == std::string::npos) continue;  // layout files
    names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  bool ok = !names.empty();
  std::string detail;
  for (const std::string& name : names) {
    const ScenarioConfig cfg = load_scenario(scenario_path(name));
    std::string csv[2], sums[2];
    for (int run = 0; run < 2; ++run) {
      RunOptions o;
      const fs::path base = dir / (name + "." + std::to_string(run));
      o.metrics_path = base.string() + ".csv";
      o.frames_dir = base.string() + "_frames";
      o.every = static_cast<int>(std::max<std::int64_t>(1, cfg.steps / 4));
      o.scale = 2;
      run_scenario(cfg, o);
      csv[run] = slurp(o.metrics_path);
      sums[run] = slurp(fs::path(o.frames_dir) / "checksums.txt");
    }
    const bool same = !csv[0].empty() && !sums[0].empty() && csv[0] == csv[1] && sums[0] == sums[1];
    ok = ok && same;
    detail += fmt("%s%s %s", detail.empty() ? "" : ", ", name.c_str(), same ? "identical" : "DIFFERENT");
  }
  fs::remove_all(dir);
  return {ok, detail};
}

Outcome projection_oracle() {
  windsim::GridSpec g{16, 9, 35.0, 20.0, 70.0};
  double worst = 0.0, worst_res = 0.0;
  for (windsim::Boundary bc : {windsim::Boundary::Channel, windsim::Boundary::Open}) {
    windsim::SimParams p;
    p.boundary = bc;
    p.projection_iters = kOracleIters;
    p.projection_tol = 1e-13;
    terrain::ObstacleField obs{Field2D<double>(g.nx, g.ny, 0.0), Field2D<double>(g.nx, g.ny, 0.0)};
    obs.blockage(5, 4) = obs.blockage(6, 4) = obs.blockage(6, 5) = obs.blockage(11, 2) = 1.0;
    windsim::FlowSolver solver(g, p);
    windsim::FlowState s = windsim::make_state(g);
    solver.apply_obstacles(s, obs);
    Rng rng(23);
    for (double& x : s.u.values()) x = rng.uniform(-10.0, 10.0);
    for (double& x : s.v.values()) x = rng.uniform(-10.0, 10.0);
    solver.enforce_boundaries(s);
    solver.copy_outflow(s);
    const oracle::DenseProjection ref = oracle::dense_project(s, bc == windsim::Boundary::Open);
    worst_res = std::max(worst_res, ref.residual);
    solver.project(s);
    for (std::size_t k = 0; k < ref.u.size(); ++k) worst = std::max(worst, std::abs(ref.u[k] - s.u.values()[k]));
    for (std::size_t k = 0; k < ref.v.size(); ++k) worst = std::max(worst, std::abs(ref.v[k] - s.v.values()[k]));
  }
  return {worst_res < kOracleResidual && worst <= kOracleVelocityTol,
          fmt("16x9 channel and open: max |du| %.2e m/s <= %.0e, dense residual %.2e < %.0e", worst,
              kOracleVelocityTol, worst_res, kOracleResidual)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> want(only.begin(), only.end());
  auto enabled = [&](int n) { return want.empty() || want.count(n) > 0; };

  const char* names[] = {"",
                         "divergence invariant",
                         "impermeability",
                         "coriolis direction",
                         "southward diversion",
                         "trail decay",
                         "repulse monotonicity",
                         "cfd vs repulse contrast",
                         "determinism",
                         "performance",
                         "projection oracle"};
  int failed = 0;
  auto report = [&](int n, const std::function<Outcome()>& f) {
    if (!enabled(n)) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-4s criterion %2d %-24s %s\n", o.pass ? "PASS" : "FAIL", n, names[n], o.detail.c_str());
    std::fflush(stdout);
  };

  ReferenceRun ref;
  if (enabled(1) || enabled(2) || enabled(9)) ref = reference_run();
  report(1, [&] { return divergence(ref); });
  report(2, [&] { return impermeability(ref); });
  report(3, coriolis);
  report(4, diversion);
  report(5, trail_decay);
  report(6, repulse_model);
  report(7, meander_contrast);
  report(8, determinism);
  report(9, [&] { return performance(ref); });
  report(10, projection_oracle);
  return failed == 0 ? 0 : 1;
}
