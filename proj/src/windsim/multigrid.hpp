#pragma once

#include <cstddef>
#include <vector>

namespace wtt::windsim {

// Aggregation multigrid V-cycle over a 5-point operator stored on a grid
// padded by one zero cell per side (stride nx + 2). Coarse operators are
// Galerkin products with 2x2 piecewise-constant prolongation; smoothing is
// damped Jacobi, so the cycle is symmetric and usable as a CG preconditioner.
class Multigrid {
 public:
  // ai/aj couple each cell to its +i/+j neighbour; diag may be zero for
  // cells outside the system.
  void build(int nx, int ny, const std::vector<double>& diag, const std::vector<double>& ai,
             const std::vector<double>& aj);
  void apply(const std::vector<double>& r, std::vector<double>& z);

  std::size_t levels() const { return levels_.size(); }

 private:
  struct Level {
    int nx = 0, ny = 0;
    std::size_t stride = 0;
    std::vector<double> diag, inv_diag, ai, aj, x, b, t;
    std::size_t at(int i, int j) const { return static_cast<std::size_t>(j + 1) * stride + (i + 1); }
  };

  void vcycle(std::size_t l);
  void smooth(Level& L, int sweeps);
  void residual(Level& L);

  std::vector<Level> levels_;
};

}  // namespace wtt::windsim
