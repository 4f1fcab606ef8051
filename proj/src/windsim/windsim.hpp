#pragma once

#include <cstdint>
#include <vector>

#include "common/events.hpp"
#include "common/field.hpp"
#include "common/vec2.hpp"
#include "terrain/terrain.hpp"
#include "windsim/multigrid.hpp"

namespace wtt::windsim {

struct GridSpec {
  int nx = 192;
  int ny = 108;
  double cell_km = 35.0;
  double lat_south = 20.0;
  double lat_north = 70.0;

  void validate() const;
  double cell_m() const { return cell_km * 1000.0; }
  // Linear map of continuous row coordinate (cells, 0 = south edge) to latitude.
  double latitude(double y_cells) const { return lat_south + (lat_north - lat_south) * y_cells / ny; }
};

// Channel: relaxed inflow on the west, zero-gradient outflow on the east
// (flux balanced against the inflow), free-slip north/south walls.
// Open: every edge is a fixed-pressure open boundary (an unbounded f-plane patch).
enum class Boundary { Channel, Open };

struct SimParams {
  double dt = 0.25;                 // model seconds per frame
  double inflow_speed = 10.0;       // m/s
  double jet_boost = 1.0;
  double f0 = 1.031e-4;             // 1/s, 45N
  double beta = 1.619e-11;          // 1/(s m), 45N
  double viscosity = 1.0e3;         // m^2/s
  double drag_low = 0.8;            // 1/s (model)
  int projection_iters = 300;       // iteration cap of the pressure solve
  double projection_tol = 1.0e-4;   // max post-projection divergence, fraction of inflow_speed per cell
  double coriolis_strength = 0.5;
  double inflow_relax_rate = 2.0;   // 1/s (model)
  double cfl_target = 0.5;          // cells per frame travelled at inflow_speed
  Boundary boundary = Boundary::Channel;

  void validate() const;
};

// Physical seconds advanced per frame. The velocity scale is chosen so that
// inflow_speed moves cfl_target cells per frame.
double physical_dt(const GridSpec& g, const SimParams& p);

// Coriolis parameter at continuous row coordinate y (cells), strength applied.
double coriolis_parameter(double y_cells, const GridSpec& g, const SimParams& p);

// Acceleration -f k x u at the centre of row `row`.
Vec2 coriolis_accel(double u, double v, int row, const GridSpec& g, const SimParams& p);

// Smooth bump in the northern third, 1 at its centre.
double jet_profile(double y_cells, int ny);
double inflow_target(double y_cells, const GridSpec& g, const SimParams& p);

// Staggered (MAC) velocity: u on x-faces, v on y-faces, in m/s.
struct FlowState {
  Field2D<double> u;         // (nx+1) x ny
  Field2D<double> v;         // nx x (ny+1)
  Field2D<double> pressure;  // nx x ny, projection potential (m/s * cell)
  SolidMask solid;           // obstacle cells of the last step
  SolidMask active;          // fluid cells connected to an open boundary
  std::int64_t step = 0;

  int nx() const { return pressure.nx(); }
  int ny() const { return pressure.ny(); }
  // Average of the four faces; zero inside solid cells.
  Vec2 center_velocity(int i, int j) const;
  bool finite() const;
};

FlowState make_state(const GridSpec& g);

// Inflow profile on every active face, v = 0, then projected.
FlowState equilibrium_state(const GridSpec& g, const SimParams& p, const terrain::ObstacleField& obs);

// Bilinear sample of cell-centre velocity at continuous map coordinates (cells).
Vec2 probe(const FlowState& s, double x, double y);

// Max |sum of outward face fluxes| over active cells, m/s per cell.
double max_divergence(const FlowState& s);
// Max |normal velocity| over faces between a fluid cell and a solid cell.
double max_solid_face_flux(const FlowState& s);
double mean_speed(const FlowState& s);
double max_speed(const FlowState& s);

struct StepReport {
  bool reset = false;
  int pressure_iterations = 0;
  double residual = 0.0;  // max divergence after projection
};

class FlowSolver {
 public:
  FlowSolver(const GridSpec& grid, const SimParams& params);

  const GridSpec& grid() const { return grid_; }
  const SimParams& params() const { return params_; }
  void set_params(const SimParams& p);

  StepReport step(FlowState& s, const terrain::ObstacleField& obs, EventLog* log = nullptr);

  // Individual stages, exposed for tests and oracles.
  void apply_obstacles(FlowState& s, const terrain::ObstacleField& obs);
  void apply_coriolis(FlowState& s);
  void apply_inflow(FlowState& s) const;
  void apply_drag(FlowState& s, const terrain::ObstacleField& obs) const;
  void diffuse(FlowState& s);
  void advect(FlowState& s);
  void enforce_boundaries(FlowState& s) const;
  void copy_outflow(FlowState& s) const;
  StepReport project(FlowState& s);

  bool u_face_active(int i, int j) const { return u_act_(i, j) != 0; }
  bool v_face_active(int i, int j) const { return v_act_(i, j) != 0; }

 private:
  // Pressure unknowns live on a grid padded by one zero cell on each side so
  // the stencils need no bounds checks.
  std::size_t pad(int i, int j) const { return static_cast<std::size_t>(j + 1) * stride_ + (i + 1); }
  void build_masks(FlowState& s);
  void build_operator(const FlowState& s);
  void apply_laplacian(const std::vector<double>& x, std::vector<double>& out) const;
  void remove_mean(std::vector<double>& f);

  GridSpec grid_;
  SimParams params_;
  double dt_phys_ = 0.0;

  bool have_mask_ = false;
  std::uint64_t mask_digest_ = 0;
  SolidMask u_act_, v_act_;
  Field2D<int> component_;  // connected region of each active cell, -1 otherwise
  int n_components_ = 0;

  int stride_ = 0;
  std::vector<int> comp_pad_;
  std::vector<double> diag_, ai_, aj_;
  std::vector<double> x_, r_, z_, s_, q_;
  std::vector<double> comp_sum_;
  std::vector<int> comp_count_;
  Field2D<double> u_tmp_, v_tmp_;
  Multigrid mg_;
};

// Functional wrappers around FlowSolver for one-off use.
FlowState step(FlowState s, const terrain::ObstacleField& obs, const GridSpec& g, const SimParams& p,
               EventLog* log = nullptr);
FlowState apply_inflow(FlowState s, const GridSpec& g, const SimParams& p);

}  // namespace wtt::windsim
