#include "windsim/multigrid.hpp"

#include <algorithm>

namespace wtt::windsim {

namespace {

constexpr double kOmega = 0.8;
constexpr int kSweeps = 2;
constexpr int kCoarseSweeps = 24;
constexpr double kOverCorrect = 1.6;

}  // namespace

void Multigrid::build(int nx, int ny, const std::vector<double>& diag, const std::vector<double>& ai,
                      const std::vector<double>& aj) {
  levels_.clear();
  Level f;
  f.nx = nx;
  f.ny = ny;
  f.stride = static_cast<std::size_t>(nx + 2);
  f.diag = diag;
  f.ai = ai;
  f.aj = aj;
  levels_.push_back(std::move(f));

  while (std::max(levels_.back().nx, levels_.back().ny) > 4) {
    const Level& F = levels_.back();
    Level C;
    C.nx = (F.nx + 1) / 2;
    C.ny = (F.ny + 1) / 2;
    C.stride = static_cast<std::size_t>(C.nx + 2);
    const std::size_t n = C.stride * static_cast<std::size_t>(C.ny + 2);
    C.diag.assign(n, 0.0);
    C.ai.assign(n, 0.0);
    C.aj.assign(n, 0.0);
    // Children outside the fine grid land in its zero padding.
    for (int J = 0; J < C.ny; ++J)
      for (int I = 0; I < C.nx; ++I) {
        const int i0 = 2 * I, j0 = 2 * J;
        const std::size_t c00 = F.at(i0, j0), c10 = c00 + 1, c01 = c00 + F.stride, c11 = c01 + 1;
        const std::size_t k = C.at(I, J);
        C.diag[k] = F.diag[c00] + F.diag[c10] + F.diag[c01] + F.diag[c11] +
                    2.0 * (F.ai[c00] + F.ai[c01] + F.aj[c00] + F.aj[c10]);
        if (I + 1 < C.nx) C.ai[k] = F.ai[c10] + F.ai[c11];
        if (J + 1 < C.ny) C.aj[k] = F.aj[c01] + F.aj[c11];
      }
    levels_.push_back(std::move(C));
  }
  for (Level& L : levels_) {
    const std::size_t n = L.diag.size();
    L.inv_diag.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      if (L.diag[k] > 1e-12) L.inv_diag[k] = 1.0 / L.diag[k];
    L.x.assign(n, 0.0);
    L.b.assign(n, 0.0);
    L.t.assign(n, 0.0);
  }
}

void Multigrid::residual(Level& L) {
  const std::size_t W = L.stride;
  const double* __restrict x = L.x.data();
  const double* __restrict d = L.diag.data();
  const double* __restrict ai = L.ai.data();
  const double* __restrict aj = L.aj.data();
  const double* __restrict b = L.b.data();
  double* __restrict t = L.t.data();
  for (int j = 0; j < L.ny; ++j) {
    const std::size_t k0 = L.at(0, j);
    for (std::size_t k = k0; k < k0 + L.nx; ++k)
      t[k] = b[k] - (d[k] * x[k] + ai[k - 1] * x[k - 1] + ai[k] * x[k + 1] + aj[k - W] * x[k - W] + aj[k] * x[k + W]);
  }
}

void Multigrid::smooth(Level& L, int sweeps) {
  for (int s = 0; s < sweeps; ++s) {
    residual(L);
    const double* __restrict t = L.t.data();
    const double* __restrict inv = L.inv_diag.data();
    double* __restrict x = L.x.data();
    for (int j = 0; j < L.ny; ++j) {
      const std::size_t k0 = L.at(0, j);
      for (std::size_t k = k0; k < k0 + L.nx; ++k) x[k] += kOmega * inv[k] * t[k];
    }
  }
}

void Multigrid::vcycle(std::size_t l) {
  Level& L = levels_[l];
  std::fill(L.x.begin(), L.x.end(), 0.0);
  if (l + 1 == levels_.size()) {
    smooth(L, kCoarseSweeps);
    return;
  }
  smooth(L, kSweeps);
  residual(L);
  Level& C = levels_[l + 1];
  for (int J = 0; J < C.ny; ++J)
    for (int I = 0; I < C.nx; ++I) {
      const std::size_t c00 = L.at(2 * I, 2 * J), c01 = c00 + L.stride;
      // Padding entries of t are zero.
      C.b[C.at(I, J)] = L.t[c00] + L.t[c00 + 1] + L.t[c01] + L.t[c01 + 1];
    }
  vcycle(l + 1);
  for (int j = 0; j < L.ny; ++j)
    for (int i = 0; i < L.nx; ++i)
      if (L.diag[L.at(i, j)] != 0.0) L.x[L.at(i, j)] += kOverCorrect * C.x[C.at(i / 2, j / 2)];
  smooth(L, kSweeps);
}

void Multigrid::apply(const std::vector<double>& r, std::vector<double>& z) {
  Level& f = levels_.front();
  std::copy(r.begin(), r.end(), f.b.begin());
  vcycle(0);
  std::copy(f.x.begin(), f.x.end(), z.begin());
}

}  // namespace wtt::windsim
