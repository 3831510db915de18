#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "blendda/advect.hpp"
#include "blendda/elliptic.hpp"
#include "blendda/state.hpp"

namespace blendda {

enum class DtPolicy { fixed, cfl };

/// Time-step selection, nondimensional times.
struct StepPlan {
  DtPolicy policy = DtPolicy::cfl;
  double dt_fixed = 0.0;
  double cfl = 0.45;
  double dt_max = 0.0;               ///< 0 means uncapped
  std::vector<double> dt_overrides;  ///< used for the first steps, in order
  SolverSettings solver;
  Reconstruction reconstruction = Reconstruction::mc_limited;       ///< full-step Strang advection
  Reconstruction half_reconstruction = Reconstruction::mc_limited;  ///< half-step forward Euler
};

struct StepLog {
  double t = 0.0;
  double dt = 0.0;
  double cfl = 0.0;
  int iters_half = 0;
  int iters_full = 0;
  double div_residual = 0.0;  ///< worst max |D(Pv)| after a corrector, relative to its input
  Regime regime = Regime::compressible;
};

/// Max advective Courant number (pointwise speed) for a given dt.
inline double advective_cfl(const ModelState& s, const Grid& g, double dt) {
  double vmax = 0.0;
  for (std::size_t k = 0; k < s.rho.size(); ++k) {
    const double u = s.rho_u[k] / s.rho[k], w = s.rho_w[k] / s.rho[k];
    vmax = std::max(vmax, std::hypot(u, w));
  }
  return vmax * dt / std::min(g.dx(), g.dz());
}

/// dt for step number `step_index` (0-based). Under the CFL policy
/// dt = cfl min(dx, dz) / max |v| with |v| the pointwise speed.
inline double compute_dt(const ModelState& s, const StepPlan& plan, const Grid& g,
                         std::size_t step_index = 0) {
  if (step_index < plan.dt_overrides.size()) return plan.dt_overrides[step_index];
  if (plan.policy == DtPolicy::fixed) {
    if (!(plan.dt_fixed > 0)) throw ConfigError("dt", "fixed time step must be positive");
    return plan.dt_fixed;
  }
  if (!(plan.cfl > 0)) throw ConfigError("cfl", "must be positive");
  const double unit = advective_cfl(s, g, 1.0);
  if (unit == 0.0) {
    if (plan.dt_max > 0) return plan.dt_max;
    throw ConfigError("dt_max", "zero velocity under the CFL policy needs a time-step cap");
  }
  double dt = plan.cfl / unit;
  if (plan.dt_max > 0) dt = std::min(dt, plan.dt_max);
  return dt;
}

namespace detail {

inline CellVector mass_weighted_velocity(const ModelState& s) {
  CellVector v{s.rho_u, s.rho_w};
  for (std::size_t k = 0; k < s.rho.size(); ++k) {
    const double th = s.P[k] / s.rho[k];
    v.x[k] *= th;
    v.z[k] *= th;
  }
  return v;
}

inline Transported transported(const ModelState& s) { return {s.P, {s.rho, s.rho_u, s.rho_w}}; }

/// Writes transported densities back; P only moves in the compressible regime.
inline ModelState from_transported(const ModelState& base, Transported&& tr) {
  ModelState out = base;
  out.rho = std::move(tr.q[0]);
  out.rho_u = std::move(tr.q[1]);
  out.rho_w = std::move(tr.q[2]);
  if (base.regime == Regime::compressible) out.P = std::move(tr.P);
  return out;
}

/// Explicit Euler source over dt: pressure gradient and perturbation buoyancy.
inline void apply_source(ModelState& s, const Model& m, double dt) {
  const Grid& g = m.grid;
  const CellVector gr = node_gradient(s.pi, g);
  for (int j = 0; j < g.nz(); ++j) {
    const double chibar = m.bg.chi_cell[j];
    for (int i = 0; i < g.nx(); ++i) {
      const double P = s.P(i, j);
      s.rho_u(i, j) -= dt * m.nd.cp * P * gr.x(i, j);
      s.rho_w(i, j) -= dt * (m.nd.cp * P * gr.z(i, j) + m.nd.g * (s.rho(i, j) - P * chibar));
    }
  }
}

/// Pointwise divergence of the corrected fluxes relative to the predictor's.
inline double relative_divergence(const PressureProblem& pb, const Correction& c, const Grid& g) {
  const double in = max_node_divergence(pb.Pu_in, pb.Pw_in, g);
  return in > 0 ? max_node_divergence(c.Pu, c.Pw, g) / in : 0.0;
}

}  // namespace detail

/// Result of the half-time predictor: pi after the half corrector and the
/// half-level advective fluxes.
struct HalfStage {
  Field2D pi;
  AdvectiveFlux flux;
  int iterations = 0;
  double div_residual = 0.0;
};

/// First-order advection over dt/2 followed by the implicit half corrector.
inline HalfStage half_stage(const ModelState& s, const Model& m, double dt, const StepPlan& plan) {
  const CellVector Pv = detail::mass_weighted_velocity(s);
  const AdvectiveFlux fn = face_fluxes(Pv.x, Pv.z, m.grid, s.t);
  Transported tr = detail::transported(s);
  advect_upwind(tr, fn, 0.5 * dt, m.grid, plan.half_reconstruction);
  ModelState adv = detail::from_transported(s, std::move(tr));
  const PressureProblem pb =
      assemble(adv, s.pi, nullptr, Stage::half, s.regime, dt, m, plan.solver);
  const SolveResult sol = solve(pb, m.grid, &s.pi);
  const Correction c = correct_momentum(adv, pb, sol.pi, m);
  HalfStage out{sol.pi, face_fluxes(c.Pu, c.Pw, m.grid, s.t + 0.5 * dt), sol.iterations};
  if (s.regime == Regime::pseudo_incompressible)
    out.div_residual = detail::relative_divergence(pb, c, m.grid);
  return out;
}

/// One semi-implicit step of length dt in the state's current regime.
///
/// Compressible: pi is reset to level n after the half stage. Pseudo-
/// incompressible: the half-stage pi (already at level n) feeds the full step.
inline StepLog step(ModelState& s, const Model& m, double dt, const StepPlan& plan) {
  if (!(dt > 0)) throw ConfigError("dt", "time step must be positive");
  const bool comp = s.regime == Regime::compressible;
  StepLog log;
  log.dt = dt;
  log.regime = s.regime;
  log.cfl = advective_cfl(s, m.grid, dt);

  const HalfStage hs = half_stage(s, m, dt, plan);
  log.iters_half = hs.iterations;

  const CellVector Pv_n = detail::mass_weighted_velocity(s);
  ModelState star = s;
  if (!comp) star.pi = hs.pi;
  detail::apply_source(star, m, 0.5 * dt);

  Transported tr = detail::transported(star);
  advect_strang(tr, hs.flux, dt, m.grid, plan.reconstruction);
  ModelState adv = detail::from_transported(star, std::move(tr));
  if (!comp) adv.P = s.P;

  const PressureProblem pb =
      assemble(adv, star.pi, comp ? &Pv_n : nullptr, Stage::full, s.regime, dt, m, plan.solver);
  const SolveResult sol = solve(pb, m.grid, &star.pi);
  log.iters_full = sol.iterations;
  const Correction c = correct_momentum(adv, pb, sol.pi, m);
  if (!comp)
    log.div_residual = std::max(hs.div_residual, detail::relative_divergence(pb, c, m.grid));
  adv.pi = sol.pi;
  adv.t = s.t + dt;
  adv.check_positive();
  s = std::move(adv);
  log.t = s.t;
  return log;
}

}  // namespace blendda
