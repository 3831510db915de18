#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "blendda/core.hpp"
#include "blendda/stepper.hpp"

namespace blendda {

// Travelling vortex: doubly periodic [-5, 5] km square, 100 m/s background
// wind in both directions, no gravity. Bubble: [-10, 10] x [0, 10] km,
// periodic in x, walls in z, constant Theta0 = 300 K background.

inline PhysConstants vortex_constants() { return PhysConstants::dry_air(0.0, 100.0); }
inline PhysConstants bubble_constants() { return PhysConstants::dry_air(9.81, 10.0); }

inline Model vortex_model(int nx = 64, int nz = 64, const PhysConstants& c = vortex_constants()) {
  const double L = 5000.0 / c.h_ref();
  Grid g(nx, nz, -L, L, -L, L, Boundary::periodic, Boundary::periodic);
  return Model(g, c, build_hydrostatic_background([](double) { return 300.0; }, g, c));
}

inline Model bubble_model(int nx = 160, int nz = 80, const PhysConstants& c = bubble_constants()) {
  const double L = 1.0e4 / c.h_ref();
  Grid g(nx, nz, -L, L, 0.0, L, Boundary::periodic, Boundary::wall);
  return Model(g, c, build_hydrostatic_background([](double) { return 300.0; }, g, c));
}

namespace vortex {

inline constexpr double R0_m = 4000.0;   // radius
inline constexpr double rho0 = 0.5;      // ambient density, units of rho_ref
inline constexpr double drho = 0.5;      // density excess at the centre
inline constexpr double fac = 1024.0;    // peak of u_theta is fac/4096 = 0.25 of 100 m/s
inline constexpr double u_bg_ms = 100.0;
inline constexpr double w_bg_ms = 100.0;
inline constexpr double u_scale_ms = 100.0;  // u_theta below is in units of 100 m/s

inline double density(double s) { return s < 1.0 ? rho0 + drho * std::pow(1.0 - s * s, 6) : rho0; }
inline double u_theta(double s) {
  return s < 1.0 ? fac * std::pow(1.0 - s, 6) * std::pow(s, 6) : 0.0;
}

/// Nondimensional pressure from the radial balance rho u_theta^2 / r = p_r / Ma^2
/// with p = 1 outside the vortex; `us` converts u_theta to units of u_ref.
/// The integrand is a polynomial of degree 35 in s, so 20-point
/// Gauss-Legendre quadrature is exact.
inline double pressure(double s, double Ma2, double us = 1.0) {
  if (s >= 1.0) return 1.0;
  auto f = [us](double sig) {
    const double u = us * u_theta(sig);
    return density(sig) * u * u / sig;
  };
  const double integral = boost::math::quadrature::gauss<double, 20>::integrate(f, s, 1.0);
  return 1.0 - Ma2 * integral;
}

/// Periodic minimal-image offset.
inline double offset(double d, double L) { return d - L * std::round(d / L); }

}  // namespace vortex

/// Balanced travelling vortex centred at (xc, zc) in metres.
inline ModelState init_vortex(const Model& m, double xc_m, double zc_m) {
  const Grid& g = m.grid;
  const double h = m.phys.h_ref();
  const double xc = xc_m / h, zc = zc_m / h;
  if (xc < g.x_min() || xc > g.x_max() || zc < g.z_min() || zc > g.z_max())
    throw DomainError("vortex centre outside the domain");
  const double Lx = g.x_max() - g.x_min(), Lz = g.z_max() - g.z_min();
  const double gamma = m.nd.gamma, Ma2 = m.nd.Ma2;
  const double R0 = vortex::R0_m / h;
  const double us = vortex::u_scale_ms / m.phys.u_ref();
  const double u_bg = vortex::u_bg_ms / m.phys.u_ref(), w_bg = vortex::w_bg_ms / m.phys.u_ref();

  ModelState s(g);
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double dx = vortex::offset(g.cell_x(i) - xc, Lx);
      const double dz = vortex::offset(g.cell_z(j) - zc, Lz);
      const double r = std::hypot(dx, dz);
      const double sr = r / R0;
      const double rho = vortex::density(sr);
      const double ut = us * vortex::u_theta(sr);
      const double u = u_bg - (r > 0 ? ut * dz / r : 0.0);
      const double w = w_bg + (r > 0 ? ut * dx / r : 0.0);
      s.rho(i, j) = rho;
      s.rho_u(i, j) = rho * u;
      s.rho_w(i, j) = rho * w;
      s.P(i, j) = std::pow(vortex::pressure(sr, Ma2, us), 1.0 / gamma);
    }
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a) {
      const double dx = vortex::offset(g.node_x(a) - xc, Lx);
      const double dz = vortex::offset(g.node_z(b) - zc, Lz);
      const double sr = std::hypot(dx, dz) / R0;
      const double exner = std::pow(vortex::pressure(sr, Ma2, us), (gamma - 1.0) / gamma);
      s.pi(a, b) = (exner - m.bg.pi_node[b]) / Ma2;
    }
  return s;
}

/// As init_vortex, then P = 1 (p = p_ref) and pi = 0 everywhere.
inline ModelState init_vortex_imbalanced(const Model& m, double xc_m, double zc_m) {
  ModelState s = init_vortex(m, xc_m, zc_m);
  s.P.fill(1.0);
  s.pi.fill(0.0);
  return s;
}

/// Warm bubble of `amplitude` kelvin on the hydrostatic Theta0 background,
/// at rest, with pi' = 0 (not in balance with the bubble).
inline ModelState init_bubble(const Model& m, double amplitude) {
  if (!(amplitude >= 0)) throw DomainError("bubble amplitude must be non-negative");
  const Grid& g = m.grid;
  const double theta0 = 300.0;
  const double r0 = 2000.0 / m.phys.h_ref(), z0 = r0;
  ModelState s(g);
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double r = std::hypot(g.cell_x(i), g.cell_z(j) - z0) / r0;
      double theta = theta0;
      if (r <= 1.0) theta += amplitude * std::cos(0.5 * std::numbers::pi * r);
      const double th_nd = theta / m.phys.T_ref();
      s.P(i, j) = m.bg.P_cell[j];
      s.rho(i, j) = m.bg.P_cell[j] / th_nd;
    }
  return s;
}

/// Advective CFL 0.45 with unlimited centred slopes in both stages.
inline StepPlan vortex_plan() {
  StepPlan p;
  p.policy = DtPolicy::cfl;
  p.cfl = 0.45;
  p.reconstruction = Reconstruction::unlimited;
  p.half_reconstruction = Reconstruction::unlimited;
  return p;
}

/// Fixed 1.9 s steps, or two 21.69 s steps followed by advective CFL 0.5.
inline StepPlan bubble_plan(const Model& m, bool advective) {
  StepPlan p;
  const double t_ref = m.phys.t_ref();
  if (advective) {
    p.policy = DtPolicy::cfl;
    p.cfl = 0.5;
    p.dt_overrides = {21.69 / t_ref, 21.69 / t_ref};
  } else {
    p.policy = DtPolicy::fixed;
    p.dt_fixed = 1.9 / t_ref;
  }
  return p;
}

/// Potential temperature per cell in kelvin.
inline Field2D potential_temperature(const ModelState& s, const Model& m) {
  Field2D th = s.P;
  for (std::size_t k = 0; k < th.size(); ++k) th[k] = s.P[k] / s.rho[k] * m.phys.T_ref();
  return th;
}

}  // namespace blendda
