#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "blendda/errors.hpp"
#include "blendda/grid.hpp"

namespace blendda {

/// Mass-weighted advective fluxes P v on cell faces.
///
/// fx has (Nx+1) x Nz entries, fx(i, j) sitting on the face between cells
/// i-1 and i. fz has Nx x (Nz+1) entries. Along a periodic axis the last
/// face duplicates the first; along a wall axis both end faces are zero.
struct AdvectiveFlux {
  Field2D fx, fz;
  double time = 0.0;

  explicit AdvectiveFlux(const Grid& g) : fx(g.nx() + 1, g.nz()), fz(g.nx(), g.nz() + 1) {}
};

/// Builds face fluxes from cell-centred Pu, Pw. A face value is the mean of
/// its two neighbours, each first smoothed 1-2-1 along the face. Together
/// with the nodal divergence in elliptic.hpp this makes the cell divergence
/// of the face fluxes the average of the four corner node divergences, so a
/// node-divergence-free field is also face-divergence-free.
inline AdvectiveFlux face_fluxes(const Field2D& Pu, const Field2D& Pw, const Grid& g,
                                 double time = 0.0) {
  AdvectiveFlux f(g);
  f.time = time;
  const int nx = g.nx(), nz = g.nz();
  // Out-of-range neighbours along a wall are mirrored (the cell itself).
  auto cz = [&](int j) { return g.periodic_z() ? g.cell_jz(j) : std::clamp(j, 0, nz - 1); };
  auto cx = [&](int i) { return g.periodic_x() ? g.cell_ix(i) : std::clamp(i, 0, nx - 1); };

  for (int j = 0; j < nz; ++j) {
    for (int i = 0; i <= nx; ++i) {
      if (!g.periodic_x() && (i == 0 || i == nx)) {
        f.fx(i, j) = 0.0;
        continue;
      }
      const int l = g.cell_ix(i - 1), r = g.cell_ix(i);
      const int jm = cz(j - 1), jp = cz(j + 1);
      const double sl = 0.25 * (Pu(l, jm) + 2.0 * Pu(l, j) + Pu(l, jp));
      const double sr = 0.25 * (Pu(r, jm) + 2.0 * Pu(r, j) + Pu(r, jp));
      f.fx(i, j) = 0.5 * (sl + sr);
    }
  }
  for (int j = 0; j <= nz; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!g.periodic_z() && (j == 0 || j == nz)) {
        f.fz(i, j) = 0.0;
        continue;
      }
      const int b = g.cell_jz(j - 1), t = g.cell_jz(j);
      const int im = cx(i - 1), ip = cx(i + 1);
      const double sb = 0.25 * (Pw(im, b) + 2.0 * Pw(i, b) + Pw(ip, b));
      const double st = 0.25 * (Pw(im, t) + 2.0 * Pw(i, t) + Pw(ip, t));
      f.fz(i, j) = 0.5 * (sb + st);
    }
  }
  return f;
}

/// Cell divergence of face fluxes.
inline Field2D face_divergence(const AdvectiveFlux& f, const Grid& g) {
  Field2D d = make_cell_field(g);
  const double dx = g.dx(), dz = g.dz();
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      d(i, j) = (f.fx(i + 1, j) - f.fx(i, j)) / dx + (f.fz(i, j + 1) - f.fz(i, j)) / dz;
  return d;
}

enum class Reconstruction { first_order, mc_limited, unlimited };

/// A carrier P and the conserved densities P Psi transported with it.
struct Transported {
  Field2D P;
  std::vector<Field2D> q;
};

namespace detail {

inline double mc_slope(double dm, double dp) {
  if (dm * dp <= 0.0) return 0.0;
  const double s = dm > 0 ? 1.0 : -1.0;
  return s * std::min({2.0 * std::abs(dm), 0.5 * std::abs(dm + dp), 2.0 * std::abs(dp)});
}

inline void check_courant(double nu) {
  if (nu > 1.0 + 1e-12) throw CflError(nu, "advective Courant number exceeds 1");
}

enum class Axis { x, z };

/// One conservative 1D sweep along `axis` over time dt.
inline void sweep(Transported& tr, const AdvectiveFlux& f, double dt, const Grid& g, Axis axis,
                  Reconstruction rec) {
  const int nx = g.nx(), nz = g.nz();
  const bool along_x = axis == Axis::x;
  const int n = along_x ? nx : nz;
  const int m = along_x ? nz : nx;
  const bool periodic = along_x ? g.periodic_x() : g.periodic_z();
  const double h = along_x ? g.dx() : g.dz();
  const double lam = dt / h;
  const std::size_t nq = tr.q.size();

  std::vector<double> P(n), flux(n + 1);
  std::vector<std::vector<double>> psi(nq, std::vector<double>(n));
  std::vector<std::vector<double>> slope(nq, std::vector<double>(n, 0.0));
  std::vector<double> face(n + 1);

  auto cell = [&](int k, int line) -> std::pair<int, int> {
    return along_x ? std::pair{k, line} : std::pair{line, k};
  };
  auto wrap = [&](int k) { return periodic ? ((k % n) + n) % n : k; };

  for (int line = 0; line < m; ++line) {
    for (int k = 0; k < n; ++k) {
      auto [i, j] = cell(k, line);
      P[k] = tr.P(i, j);
      for (std::size_t c = 0; c < nq; ++c) psi[c][k] = tr.q[c](i, j) / P[k];
    }
    for (int k = 0; k <= n; ++k) flux[k] = along_x ? f.fx(k, line) : f.fz(line, k);

    if (rec != Reconstruction::first_order) {
      for (std::size_t c = 0; c < nq; ++c) {
        for (int k = 0; k < n; ++k) {
          if (!periodic && (k == 0 || k == n - 1)) {
            slope[c][k] = 0.0;
            continue;
          }
          const double dm = psi[c][k] - psi[c][wrap(k - 1)];
          const double dp = psi[c][wrap(k + 1)] - psi[c][k];
          slope[c][k] = rec == Reconstruction::mc_limited ? mc_slope(dm, dp) : 0.5 * (dm + dp);
        }
      }
    }

    std::vector<double> newP(n);
    for (int k = 0; k < n; ++k) newP[k] = P[k] - lam * (flux[k + 1] - flux[k]);

    for (std::size_t c = 0; c < nq; ++c) {
      for (int k = 0; k <= n; ++k) {
        const double F = flux[k];
        if (F == 0.0) {
          face[k] = 0.0;
          continue;
        }
        const int up = F > 0 ? wrap(k - 1) : wrap(k);
        if (up < 0 || up >= n) {
          face[k] = 0.0;
          continue;
        }
        const double nu = std::abs(F) * lam / P[up];
        check_courant(nu);
        const double sgn = F > 0 ? 1.0 : -1.0;
        face[k] = F * (psi[c][up] + sgn * 0.5 * (1.0 - nu) * slope[c][up]);
      }
      for (int k = 0; k < n; ++k) {
        auto [i, j] = cell(k, line);
        tr.q[c](i, j) -= lam * (face[k + 1] - face[k]);
      }
    }
    for (int k = 0; k < n; ++k) {
      auto [i, j] = cell(k, line);
      tr.P(i, j) = newP[k];
    }
  }
}

}  // namespace detail

/// Unsplit forward-Euler update over dt with upwind face states. With
/// first_order the face state is the upwind cell value; otherwise the upwind
/// cell's reconstructed value at the face (no time-centering).
inline void advect_upwind(Transported& tr, const AdvectiveFlux& f, double dt, const Grid& g,
                          Reconstruction rec = Reconstruction::first_order) {
  const int nx = g.nx(), nz = g.nz();
  const double dx = g.dx(), dz = g.dz();
  const std::size_t nq = tr.q.size();

  for (int j = 0; j < nz; ++j)
    for (int i = 0; i < nx; ++i) {
      const double Fw = f.fx(i, j), Fe = f.fx(i + 1, j);
      const double Fs = f.fz(i, j), Fn = f.fz(i, j + 1);
      // Directional outflow Courant numbers.
      detail::check_courant((std::max(Fe, 0.0) - std::min(Fw, 0.0)) * dt / dx / tr.P(i, j));
      detail::check_courant((std::max(Fn, 0.0) - std::min(Fs, 0.0)) * dt / dz / tr.P(i, j));
    }

  auto slope = [&](const Field2D& psi, int i, int j, bool along_x) {
    if (rec == Reconstruction::first_order) return 0.0;
    const int lo = along_x ? g.cell_ix(i - 1) : g.cell_jz(j - 1);
    const int hi = along_x ? g.cell_ix(i + 1) : g.cell_jz(j + 1);
    if (lo < 0 || hi < 0) return 0.0;
    const double here = psi(i, j);
    const double dm = here - (along_x ? psi(lo, j) : psi(i, lo));
    const double dp = (along_x ? psi(hi, j) : psi(i, hi)) - here;
    return rec == Reconstruction::mc_limited ? detail::mc_slope(dm, dp) : 0.5 * (dm + dp);
  };

  Transported out = tr;
  Field2D psi = make_cell_field(g);
  Field2D fx(nx + 1, nz), fz(nx, nz + 1);
  for (std::size_t c = 0; c < nq; ++c) {
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = tr.q[c][k] / tr.P[k];
    for (int j = 0; j < nz; ++j)
      for (int a = 0; a <= nx; ++a) {
        const double F = f.fx(a, j);
        const int up = F > 0 ? g.cell_ix(a - 1) : g.cell_ix(a);
        if (F == 0.0 || up < 0) {
          fx(a, j) = 0.0;
          continue;
        }
        fx(a, j) = F * (psi(up, j) + (F > 0 ? 0.5 : -0.5) * slope(psi, up, j, true));
      }
    for (int b = 0; b <= nz; ++b)
      for (int i = 0; i < nx; ++i) {
        const double F = f.fz(i, b);
        const int up = F > 0 ? g.cell_jz(b - 1) : g.cell_jz(b);
        if (F == 0.0 || up < 0) {
          fz(i, b) = 0.0;
          continue;
        }
        fz(i, b) = F * (psi(i, up) + (F > 0 ? 0.5 : -0.5) * slope(psi, i, up, false));
      }
    for (int j = 0; j < nz; ++j)
      for (int i = 0; i < nx; ++i)
        out.q[c](i, j) = tr.q[c](i, j) - dt / dx * (fx(i + 1, j) - fx(i, j)) -
                         dt / dz * (fz(i, j + 1) - fz(i, j));
  }
  for (int j = 0; j < nz; ++j)
    for (int i = 0; i < nx; ++i)
      out.P(i, j) = tr.P(i, j) - dt / dx * (f.fx(i + 1, j) - f.fx(i, j)) -
                    dt / dz * (f.fz(i, j + 1) - f.fz(i, j));
  tr = std::move(out);
}

/// Strang split x(dt/2) z(dt) x(dt/2) with 1D conservative sweeps.
inline void advect_strang(Transported& tr, const AdvectiveFlux& f, double dt, const Grid& g,
                          Reconstruction rec = Reconstruction::mc_limited) {
  detail::sweep(tr, f, 0.5 * dt, g, detail::Axis::x, rec);
  detail::sweep(tr, f, dt, g, detail::Axis::z, rec);
  detail::sweep(tr, f, 0.5 * dt, g, detail::Axis::x, rec);
}

}  // namespace blendda
