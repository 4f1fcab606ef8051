#include "windsim/windsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "common/error.hpp"

namespace wtt::windsim {

void GridSpec::validate() const {
  if (nx < 8) throw ConfigError("grid.nx", "must be >= 8");
  if (ny < 8) throw ConfigError("grid.ny", "must be >= 8");
  if (!(cell_km > 0.0)) throw ConfigError("grid.cell_km", "must be > 0");
  if (!(lat_south < lat_north)) throw ConfigError("grid.lat_south", "must be < lat_north");
}

void SimParams::validate() const {
  if (!(dt > 0.0)) throw ConfigError("sim.dt", "must be > 0");
  if (projection_iters < 1) throw ConfigError("sim.projection_iters", "must be >= 1");
  if (!(viscosity >= 0.0)) throw ConfigError("sim.viscosity", "must be >= 0");
  if (!(jet_boost >= 0.0)) throw ConfigError("sim.jet_boost", "must be >= 0");
  if (!(drag_low >= 0.0)) throw ConfigError("sim.drag_low", "must be >= 0");
  if (!(projection_tol > 0.0)) throw ConfigError("sim.projection_tol", "must be > 0");
  if (!(inflow_relax_rate >= 0.0)) throw ConfigError("sim.inflow_relax_rate", "must be >= 0");
  if (!(cfl_target > 0.0 && cfl_target <= 1.0)) throw ConfigError("sim.cfl_target", "must be in (0, 1]");
  if (!std::isfinite(f0) || !std::isfinite(beta) || !std::isfinite(coriolis_strength))
    throw ConfigError("sim.f0", "Coriolis parameters must be finite");
}

double physical_dt(const GridSpec& g, const SimParams& p) {
  const double speed = p.inflow_speed > 0.0 ? p.inflow_speed : 1.0;
  return p.cfl_target * g.cell_m() / speed;
}

double coriolis_parameter(double y_cells, const GridSpec& g, const SimParams& p) {
  const double y_m = (y_cells - 0.5 * g.ny) * g.cell_m();
  return (p.f0 + p.beta * y_m) * p.coriolis_strength;
}

Vec2 coriolis_accel(double u, double v, int row, const GridSpec& g, const SimParams& p) {
  const double f = coriolis_parameter(row + 0.5, g, p);
  return {f * v, -f * u};
}

double jet_profile(double y_cells, int ny) {
  const double centre = ny * (5.0 / 6.0);
  const double width = ny / 12.0;
  const double d = (y_cells - centre) / width;
  return std::exp(-d * d);
}

double inflow_target(double y_cells, const GridSpec& g, const SimParams& p) {
  return p.inflow_speed * (1.0 + p.jet_boost * jet_profile(y_cells, g.ny));
}

Vec2 FlowState::center_velocity(int i, int j) const {
  return {0.5 * (u(i, j) + u(i + 1, j)), 0.5 * (v(i, j) + v(i, j + 1))};
}

bool FlowState::finite() const {
  for (double x : u.values())
    if (!std::isfinite(x)) return false;
  for (double x : v.values())
    if (!std::isfinite(x)) return false;
  return true;
}

FlowState make_state(const GridSpec& g) {
  FlowState s;
  s.u = Field2D<double>(g.nx + 1, g.ny, 0.0);
  s.v = Field2D<double>(g.nx, g.ny + 1, 0.0);
  s.pressure = Field2D<double>(g.nx, g.ny, 0.0);
  s.solid = SolidMask(g.nx, g.ny, 0);
  s.active = SolidMask(g.nx, g.ny, 1);
  return s;
}

namespace {

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

double sample_u(const Field2D<double>& u, double x, double y) {
  const int nx = u.nx() - 1, ny = u.ny();
  const double fx = std::clamp(x, 0.0, static_cast<double>(nx));
  const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(ny - 1));
  const int i0 = std::min(static_cast<int>(fx), nx - 1);
  const int j0 = std::min(static_cast<int>(fy), ny - 2);
  const double tx = fx - i0, ty = fy - j0;
  return lerp(lerp(u(i0, j0), u(i0 + 1, j0), tx), lerp(u(i0, j0 + 1), u(i0 + 1, j0 + 1), tx), ty);
}

double sample_v(const Field2D<double>& v, double x, double y) {
  const int nx = v.nx(), ny = v.ny() - 1;
  const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(nx - 1));
  const double fy = std::clamp(y, 0.0, static_cast<double>(ny));
  const int i0 = std::min(static_cast<int>(fx), nx - 2);
  const int j0 = std::min(static_cast<int>(fy), ny - 1);
  const double tx = fx - i0, ty = fy - j0;
  return lerp(lerp(v(i0, j0), v(i0 + 1, j0), tx), lerp(v(i0, j0 + 1), v(i0 + 1, j0 + 1), tx), ty);
}

}  // namespace

Vec2 probe(const FlowState& s, double x, double y) {
  const int nx = s.nx(), ny = s.ny();
  x = std::clamp(x, 0.0, static_cast<double>(nx));
  y = std::clamp(y, 0.0, static_cast<double>(ny));
  const int ci = std::min(static_cast<int>(x), nx - 1);
  const int cj = std::min(static_cast<int>(y), ny - 1);
  if (s.solid(ci, cj)) return {0.0, 0.0};
  const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(nx - 1));
  const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(ny - 1));
  const int i0 = std::min(static_cast<int>(fx), nx - 2);
  const int j0 = std::min(static_cast<int>(fy), ny - 2);
  const double tx = fx - i0, ty = fy - j0;
  const Vec2 a = s.center_velocity(i0, j0), b = s.center_velocity(i0 + 1, j0);
  const Vec2 c = s.center_velocity(i0, j0 + 1), d = s.center_velocity(i0 + 1, j0 + 1);
  return {lerp(lerp(a.x, b.x, tx), lerp(c.x, d.x, tx), ty), lerp(lerp(a.y, b.y, tx), lerp(c.y, d.y, tx), ty)};
}

double max_divergence(const FlowState& s) {
  double m = 0.0;
  for (int j = 0; j < s.ny(); ++j)
    for (int i = 0; i < s.nx(); ++i) {
      if (!s.active(i, j)) continue;
      const double d = s.u(i + 1, j) - s.u(i, j) + s.v(i, j + 1) - s.v(i, j);
      m = std::max(m, std::abs(d));
    }
  return m;
}

double max_solid_face_flux(const FlowState& s) {
  double m = 0.0;
  const int nx = s.nx(), ny = s.ny();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const bool l = i > 0 && s.solid(i - 1, j), r = i < nx && s.solid(i, j);
      if (l || r) m = std::max(m, std::abs(s.u(i, j)));
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const bool b = j > 0 && s.solid(i, j - 1), t = j < ny && s.solid(i, j);
      if (b || t) m = std::max(m, std::abs(s.v(i, j)));
    }
  return m;
}

double mean_speed(const FlowState& s) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int j = 0; j < s.ny(); ++j)
    for (int i = 0; i < s.nx(); ++i) {
      if (s.solid(i, j)) continue;
      sum += norm(s.center_velocity(i, j));
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double max_speed(const FlowState& s) {
  double m = 0.0;
  for (int j = 0; j < s.ny(); ++j)
    for (int i = 0; i < s.nx(); ++i) m = std::max(m, norm(s.center_velocity(i, j)));
  return m;
}

FlowSolver::FlowSolver(const GridSpec& grid, const SimParams& params) : grid_(grid), params_(params) {
  grid_.validate();
  params_.validate();
  dt_phys_ = physical_dt(grid_, params_);
  const int nx = grid_.nx, ny = grid_.ny;
  u_act_ = SolidMask(nx + 1, ny, 0);
  v_act_ = SolidMask(nx, ny + 1, 0);
  component_ = Field2D<int>(nx, ny, -1);
  stride_ = nx + 2;
  const std::size_t n = static_cast<std::size_t>(nx + 2) * (ny + 2);
  comp_pad_.assign(n, -1);
  for (auto* v : {&diag_, &ai_, &aj_, &x_, &r_, &z_, &s_, &q_}) v->assign(n, 0.0);
}

void FlowSolver::set_params(const SimParams& p) {
  p.validate();
  params_ = p;
  dt_phys_ = physical_dt(grid_, params_);
  have_mask_ = false;
}

void FlowSolver::apply_obstacles(FlowState& s, const terrain::ObstacleField& obs) {
  const int nx = grid_.nx, ny = grid_.ny;
  if (obs.nx() != nx || obs.ny() != ny)
    throw Error(ErrorKind::InvalidArgument, "obstacle field dimensions do not match the grid");
  if (s.nx() != nx || s.ny() != ny)
    throw Error(ErrorKind::InvalidArgument, "flow state dimensions do not match the grid");
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) s.solid(i, j) = obs.solid(i, j) ? 1 : 0;

  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s.solid.values()) h = (h ^ c) * 0x100000001b3ull;
  if (!have_mask_ || h != mask_digest_) {
    mask_digest_ = h;
    have_mask_ = true;
    build_masks(s);
    build_operator(s);
  } else {
    s.active = SolidMask(nx, ny, 0);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) s.active(i, j) = component_(i, j) >= 0;
  }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (!s.active(i, j)) s.pressure(i, j) = 0.0;
  enforce_boundaries(s);
}

void FlowSolver::build_masks(FlowState& s) {
  const int nx = grid_.nx, ny = grid_.ny;
  const bool open = params_.boundary == Boundary::Open;

  // Fluid cells that cannot reach an open boundary would make the pressure
  // system inconsistent (fed by inflow with no exit); they are frozen.
  s.active = SolidMask(nx, ny, 0);
  component_.fill(-1);
  n_components_ = 0;
  std::deque<std::pair<int, int>> queue;
  auto flood = [&](int i0, int j0) {
    if (s.solid(i0, j0) || s.active(i0, j0)) return;
    const int id = n_components_++;
    auto visit = [&](int i, int j) {
      if (!s.solid(i, j) && !s.active(i, j)) {
        s.active(i, j) = 1;
        component_(i, j) = id;
        queue.emplace_back(i, j);
      }
    };
    visit(i0, j0);
    while (!queue.empty()) {
      auto [i, j] = queue.front();
      queue.pop_front();
      if (i > 0) visit(i - 1, j);
      if (i + 1 < nx) visit(i + 1, j);
      if (j > 0) visit(i, j - 1);
      if (j + 1 < ny) visit(i, j + 1);
    }
  };
  for (int j = 0; j < ny; ++j) flood(nx - 1, j);
  if (open) {
    for (int j = 0; j < ny; ++j) flood(0, j);
    for (int i = 0; i < nx; ++i) {
      flood(i, 0);
      flood(i, ny - 1);
    }
  }
  comp_sum_.assign(n_components_, 0.0);
  comp_count_.assign(n_components_, 0);
  std::fill(comp_pad_.begin(), comp_pad_.end(), -1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) comp_pad_[pad(i, j)] = component_(i, j);

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      bool a;
      if (i == 0) a = s.active(0, j);
      else if (i == nx) a = s.active(nx - 1, j);
      else a = s.active(i - 1, j) && s.active(i, j);
      u_act_(i, j) = a;
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      bool a;
      if (j == 0) a = open && s.active(i, 0);
      else if (j == ny) a = open && s.active(i, ny - 1);
      else a = s.active(i, j - 1) && s.active(i, j);
      v_act_(i, j) = a;
    }
}

void FlowSolver::build_operator(const FlowState& s) {
  const int nx = grid_.nx, ny = grid_.ny;
  const bool open = params_.boundary == Boundary::Open;
  std::fill(diag_.begin(), diag_.end(), 0.0);
  std::fill(ai_.begin(), ai_.end(), 0.0);
  std::fill(aj_.begin(), aj_.end(), 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!s.active(i, j)) continue;
      // Neighbouring active cells couple; open edges add a fixed-pressure
      // ghost; walls, solids and the prescribed inflow edge add nothing.
      double d = 0.0;
      d += i > 0 ? s.active(i - 1, j) : open;
      d += i + 1 < nx ? s.active(i + 1, j) : open;
      d += j > 0 ? s.active(i, j - 1) : open;
      d += j + 1 < ny ? s.active(i, j + 1) : open;
      const std::size_t k = pad(i, j);
      diag_[k] = d;
      if (i + 1 < nx && s.active(i + 1, j)) ai_[k] = -1.0;
      if (j + 1 < ny && s.active(i, j + 1)) aj_[k] = -1.0;
    }

  mg_.build(nx, ny, diag_, ai_, aj_);
}

void FlowSolver::apply_laplacian(const std::vector<double>& x, std::vector<double>& out) const {
  const int nx = grid_.nx, ny = grid_.ny;
  const std::size_t W = stride_;
  for (int j = 0; j < ny; ++j) {
    const std::size_t k0 = pad(0, j);
    for (std::size_t k = k0; k < k0 + nx; ++k)
      out[k] = diag_[k] * x[k] + ai_[k - 1] * x[k - 1] + ai_[k] * x[k + 1] + aj_[k - W] * x[k - W] + aj_[k] * x[k + W];
  }
}

void FlowSolver::remove_mean(std::vector<double>& f) {
  std::fill(comp_sum_.begin(), comp_sum_.end(), 0.0);
  std::fill(comp_count_.begin(), comp_count_.end(), 0);
  for (std::size_t k = 0; k < f.size(); ++k)
    if (comp_pad_[k] >= 0) {
      comp_sum_[comp_pad_[k]] += f[k];
      ++comp_count_[comp_pad_[k]];
    }
  for (int c = 0; c < n_components_; ++c)
    if (comp_count_[c]) comp_sum_[c] /= comp_count_[c];
  for (std::size_t k = 0; k < f.size(); ++k)
    if (comp_pad_[k] >= 0) f[k] -= comp_sum_[comp_pad_[k]];
}

void FlowSolver::apply_coriolis(FlowState& s) {
  const int nx = grid_.nx, ny = grid_.ny;
  u_tmp_ = s.u;
  v_tmp_ = s.v;
  const Field2D<double>& u0 = u_tmp_;
  const Field2D<double>& v0 = v_tmp_;
  // Exact rotation by f dt: the velocity magnitude is preserved.
  for (int j = 0; j < ny; ++j) {
    const double theta = coriolis_parameter(j + 0.5, grid_, params_) * dt_phys_;
    if (theta == 0.0) continue;
    const double c = std::cos(theta), sn = std::sin(theta);
    for (int i = 1; i < nx; ++i) {
      if (!u_act_(i, j)) continue;
      const double vbar = 0.25 * (v0(i - 1, j) + v0(i, j) + v0(i - 1, j + 1) + v0(i, j + 1));
      s.u(i, j) = c * u0(i, j) + sn * vbar;
    }
  }
  for (int j = 1; j < ny; ++j) {
    const double theta = coriolis_parameter(j, grid_, params_) * dt_phys_;
    if (theta == 0.0) continue;
    const double c = std::cos(theta), sn = std::sin(theta);
    for (int i = 0; i < nx; ++i) {
      if (!v_act_(i, j)) continue;
      const double ubar = 0.25 * (u0(i, j - 1) + u0(i + 1, j - 1) + u0(i, j) + u0(i + 1, j));
      s.v(i, j) = -sn * ubar + c * v0(i, j);
    }
  }
}

void FlowSolver::apply_inflow(FlowState& s) const {
  if (params_.boundary != Boundary::Channel) return;
  const double a = std::min(1.0, params_.inflow_relax_rate * params_.dt);
  for (int j = 0; j < grid_.ny; ++j) {
    if (!s.active(0, j)) {
      s.u(0, j) = 0.0;
      continue;
    }
    s.u(0, j) += a * (inflow_target(j + 0.5, grid_, params_) - s.u(0, j));
  }
  for (int j = 1; j < grid_.ny; ++j)
    if (s.active(0, j - 1) && s.active(0, j)) s.v(0, j) -= a * s.v(0, j);
}

void FlowSolver::apply_drag(FlowState& s, const terrain::ObstacleField& obs) const {
  const int nx = grid_.nx, ny = grid_.ny;
  const double dt = params_.dt;
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const double d = 0.5 * (obs.drag(i - 1, j) + obs.drag(i, j));
      if (d > 0.0) s.u(i, j) *= std::max(0.0, 1.0 - d * dt);
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double d = 0.5 * (obs.drag(i, j - 1) + obs.drag(i, j));
      if (d > 0.0) s.v(i, j) *= std::max(0.0, 1.0 - d * dt);
    }
}

void FlowSolver::diffuse(FlowState& s) {
  const double alpha_total = params_.viscosity * dt_phys_ / (grid_.cell_m() * grid_.cell_m());
  if (alpha_total <= 0.0) return;
  const int substeps = std::max(1, static_cast<int>(std::ceil(alpha_total / 0.2)));
  const double alpha = alpha_total / substeps;
  const int nx = grid_.nx, ny = grid_.ny;
  // Inactive neighbours contribute no flux: free-slip at walls and solids.
  for (int k = 0; k < substeps; ++k) {
    u_tmp_ = s.u;
    for (int j = 0; j < ny; ++j)
      for (int i = 1; i < nx; ++i) {
        if (!u_act_(i, j)) continue;
        const double c = u_tmp_(i, j);
        double lap = 0.0;
        if (u_act_(i - 1, j)) lap += u_tmp_(i - 1, j) - c;
        if (u_act_(i + 1, j)) lap += u_tmp_(i + 1, j) - c;
        if (j > 0 && u_act_(i, j - 1)) lap += u_tmp_(i, j - 1) - c;
        if (j + 1 < ny && u_act_(i, j + 1)) lap += u_tmp_(i, j + 1) - c;
        s.u(i, j) = c + alpha * lap;
      }
    v_tmp_ = s.v;
    for (int j = 1; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (!v_act_(i, j)) continue;
        const double c = v_tmp_(i, j);
        double lap = 0.0;
        if (i > 0 && v_act_(i - 1, j)) lap += v_tmp_(i - 1, j) - c;
        if (i + 1 < nx && v_act_(i + 1, j)) lap += v_tmp_(i + 1, j) - c;
        if (v_act_(i, j - 1)) lap += v_tmp_(i, j - 1) - c;
        if (v_act_(i, j + 1)) lap += v_tmp_(i, j + 1) - c;
        s.v(i, j) = c + alpha * lap;
      }
  }
}

void FlowSolver::advect(FlowState& s) {
  const int nx = grid_.nx, ny = grid_.ny;
  const double k = dt_phys_ / grid_.cell_m();
  u_tmp_ = s.u;
  v_tmp_ = s.v;
  const Field2D<double>& u0 = u_tmp_;
  const Field2D<double>& v0 = v_tmp_;
  auto velocity = [&](double x, double y) { return Vec2{sample_u(u0, x, y) * k, sample_v(v0, x, y) * k}; };
  // Midpoint backtrace.
  auto backtrace = [&](Vec2 p, Vec2 vel) {
    Vec2 mid = p - 0.5 * vel;
    if (!std::isfinite(mid.x) || !std::isfinite(mid.y)) mid = p;
    Vec2 q = p - velocity(mid.x, mid.y);
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) return p;
    q.x = std::clamp(q.x, 0.0, static_cast<double>(nx));
    q.y = std::clamp(q.y, 0.0, static_cast<double>(ny));
    return q;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      if (!u_act_(i, j)) continue;
      const Vec2 p{static_cast<double>(i), j + 0.5};
      const double vbar = 0.25 * (v0(i - 1, j) + v0(i, j) + v0(i - 1, j + 1) + v0(i, j + 1));
      const Vec2 q = backtrace(p, Vec2{u0(i, j) * k, vbar * k});
      s.u(i, j) = sample_u(u0, q.x, q.y);
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!v_act_(i, j)) continue;
      const Vec2 p{i + 0.5, static_cast<double>(j)};
      const double ubar = 0.25 * (u0(i, j - 1) + u0(i + 1, j - 1) + u0(i, j) + u0(i + 1, j));
      const Vec2 q = backtrace(p, Vec2{ubar * k, v0(i, j) * k});
      s.v(i, j) = sample_v(v0, q.x, q.y);
    }
}

void FlowSolver::enforce_boundaries(FlowState& s) const {
  double* u = s.u.data();
  const unsigned char* ua = u_act_.data();
  for (std::size_t k = 0; k < s.u.size(); ++k)
    if (!ua[k]) u[k] = 0.0;
  double* v = s.v.data();
  const unsigned char* va = v_act_.data();
  for (std::size_t k = 0; k < s.v.size(); ++k)
    if (!va[k]) v[k] = 0.0;
}

void FlowSolver::copy_outflow(FlowState& s) const {
  const int nx = grid_.nx, ny = grid_.ny;
  for (int j = 0; j < ny; ++j)
    if (u_act_(nx, j)) s.u(nx, j) = s.u(nx - 1, j);
  if (params_.boundary == Boundary::Open) {
    for (int j = 0; j < ny; ++j)
      if (u_act_(0, j)) s.u(0, j) = s.u(1, j);
    for (int i = 0; i < nx; ++i) {
      if (v_act_(i, 0)) s.v(i, 0) = s.v(i, 1);
      if (v_act_(i, ny)) s.v(i, ny) = s.v(i, ny - 1);
    }
    return;
  }
  // Every boundary face of a Channel region is prescribed, so each region's
  // outflow must carry exactly its inflow for the pressure system to be solvable.
  std::vector<double> net(n_components_, 0.0);
  std::vector<int> exits(n_components_, 0);
  for (int j = 0; j < ny; ++j) {
    if (s.active(0, j)) net[component_(0, j)] += s.u(0, j);
    if (s.active(nx - 1, j)) {
      net[component_(nx - 1, j)] -= s.u(nx, j);
      ++exits[component_(nx - 1, j)];
    }
  }
  for (int j = 0; j < ny; ++j)
    if (s.active(nx - 1, j)) {
      const int c = component_(nx - 1, j);
      s.u(nx, j) += net[c] / exits[c];
    }
}

StepReport FlowSolver::project(FlowState& s) {
  const int nx = grid_.nx, ny = grid_.ny;
  const bool open = params_.boundary == Boundary::Open;
  const double tol = params_.projection_tol * (params_.inflow_speed > 0.0 ? params_.inflow_speed : 1.0);
  const std::size_t n = x_.size();

  // Warm start from the previous frame's potential.
  std::fill(x_.begin(), x_.end(), 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) x_[pad(i, j)] = s.pressure(i, j);

  // r = -div - A x
  apply_laplacian(x_, q_);
  std::fill(r_.begin(), r_.end(), 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!s.active(i, j)) continue;
      const double div = s.u(i + 1, j) - s.u(i, j) + s.v(i, j + 1) - s.v(i, j);
      r_[pad(i, j)] = -div - q_[pad(i, j)];
    }
  // Channel regions are pure Neumann: drop the (rounding-level) null-space
  // component of the residual so the singular system stays consistent.
  if (!open) remove_mean(r_);
  auto max_abs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  auto dotp = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    return acc;
  };
  double rmax = max_abs(r_);

  StepReport rep;
  if (rmax > tol) {
    mg_.apply(r_, z_);
    s_ = z_;
    double sigma = dotp(z_, r_);
    for (int it = 1; it <= params_.projection_iters; ++it) {
      rep.pressure_iterations = it;
      apply_laplacian(s_, z_);  // z_ holds A s
      const double denom = dotp(s_, z_);
      if (denom == 0.0) break;
      const double alpha = sigma / denom;
      rmax = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        x_[k] += alpha * s_[k];
        r_[k] -= alpha * z_[k];
        rmax = std::max(rmax, std::abs(r_[k]));
      }
      if (rmax <= tol) break;
      if (!open && it % 16 == 0) remove_mean(r_);
      mg_.apply(r_, z_);
      const double sigma_new = dotp(z_, r_);
      const double beta = sigma_new / sigma;
      sigma = sigma_new;
      for (std::size_t k = 0; k < n; ++k) s_[k] = z_[k] + beta * s_[k];
    }
  }
  if (!open) remove_mean(x_);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) s.pressure(i, j) = x_[pad(i, j)];

  const Field2D<double>& p = s.pressure;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      if (!u_act_(i, j)) continue;
      if (i == 0) {
        if (open) s.u(i, j) -= p(0, j);
      } else if (i == nx) {
        if (open) s.u(i, j) += p(nx - 1, j);
      } else {
        s.u(i, j) -= p(i, j) - p(i - 1, j);
      }
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!v_act_(i, j)) continue;
      if (j == 0) s.v(i, j) -= p(i, 0);
      else if (j == ny) s.v(i, j) += p(i, ny - 1);
      else s.v(i, j) -= p(i, j) - p(i, j - 1);
    }
  rep.residual = rmax;
  return rep;
}

StepReport FlowSolver::step(FlowState& s, const terrain::ObstacleField& obs, EventLog* log) {
  StepReport rep;
  if (s.finite()) {
    apply_obstacles(s, obs);

    apply_coriolis(s);
    apply_inflow(s);
    apply_drag(s, obs);
    copy_outflow(s);

    diffuse(s);
    advect(s);

    enforce_boundaries(s);
    copy_outflow(s);
    rep = project(s);
    enforce_boundaries(s);
  }

  if (!s.finite()) {
    const std::int64_t n = s.step;
    FlowState fresh = equilibrium_state(grid_, params_, obs);
    fresh.step = n;
    s = std::move(fresh);
    rep.reset = true;
    if (log) log->push(n, "nan_reset", "non-finite velocity; state reset to inflow equilibrium");
  }
  ++s.step;
  return rep;
}

FlowState equilibrium_state(const GridSpec& g, const SimParams& p, const terrain::ObstacleField& obs) {
  FlowSolver solver(g, p);
  FlowState s = make_state(g);
  solver.apply_obstacles(s, obs);
  for (int j = 0; j < g.ny; ++j) {
    const double target = inflow_target(j + 0.5, g, p);
    for (int i = 0; i <= g.nx; ++i)
      if (solver.u_face_active(i, j)) s.u(i, j) = target;
  }
  solver.copy_outflow(s);
  solver.project(s);
  solver.enforce_boundaries(s);
  if (!s.finite()) {
    s.u.fill(0.0);
    s.v.fill(0.0);
    s.pressure.fill(0.0);
  }
  return s;
}

FlowState step(FlowState s, const terrain::ObstacleField& obs, const GridSpec& g, const SimParams& p, EventLog* log) {
  FlowSolver solver(g, p);
  solver.step(s, obs, log);
  return s;
}

FlowState apply_inflow(FlowState s, const GridSpec& g, const SimParams& p) {
  FlowSolver solver(g, p);
  // The inflow edge only needs the active mask carried by the state.
  solver.apply_inflow(s);
  return s;
}

}  // namespace wtt::windsim
