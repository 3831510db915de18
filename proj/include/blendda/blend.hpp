#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "blendda/stepper.hpp"

namespace blendda {

enum class PiChoice { half, full };

inline const char* to_string(PiChoice c) { return c == PiChoice::half ? "half" : "full"; }

struct BlendConfig {
  bool enabled = true;
  PiChoice pi_choice = PiChoice::half;
  int n_psinc_steps = 1;
  bool apply_at_init = true;
  bool apply_after_da = false;

  void validate() const {
    if (n_psinc_steps < 1) throw ConfigError("n_psinc_steps", "must be at least 1");
  }
};

struct BlendEvent {
  double t;
  std::string direction;  ///< "to_psinc" or "to_comp"
  PiChoice pi_choice;
};

namespace detail {

inline void convert_P(ModelState& s, const Field2D& pi, const Model& m, double sign) {
  const Grid& g = m.grid;
  const double gm1 = m.nd.gamma - 1.0;
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double rad = std::pow(s.P(i, j), gm1) + sign * m.nd.Ma2 * node_avg(pi, g, i, j);
      if (!(rad > 0))
        throw ConversionError("regime conversion radicand non-positive at cell (" +
                              std::to_string(i) + ", " + std::to_string(j) + ")");
      // Psi = (1/Theta, u, w) is held fixed, so rho and the momenta scale with P.
      const double r = std::pow(rad, 1.0 / gm1) / s.P(i, j);
      s.P(i, j) *= r;
      s.rho(i, j) *= r;
      s.rho_u(i, j) *= r;
      s.rho_w(i, j) *= r;
    }
}

}  // namespace detail

/// P <- (P^(gamma-1) - Ma^2 pi)^(1/(gamma-1)), pi averaged from the four nodes.
/// Theta and the velocities are unchanged.
inline void to_psinc(ModelState& s, const Model& m) {
  if (s.regime != Regime::compressible) throw LogicError("to_psinc: state is not compressible");
  detail::convert_P(s, s.pi, m, -1.0);
  s.regime = Regime::pseudo_incompressible;
}

/// P <- (P^(gamma-1) + Ma^2 pi_source)^(1/(gamma-1)); pi_source becomes the state's pi.
inline void to_comp(ModelState& s, const Field2D& pi_source, const Model& m) {
  if (s.regime != Regime::pseudo_incompressible)
    throw LogicError("to_comp: state is not pseudo-incompressible");
  detail::convert_P(s, pi_source, m, 1.0);
  s.pi = pi_source;
  s.regime = Regime::compressible;
}

/// pi from one extra pseudo-incompressible half stage of length dt/2. The
/// advected fields of that stage are discarded and the clock does not move.
inline Field2D harvest_pi_half(const ModelState& s, const Model& m, double dt,
                               const StepPlan& plan) {
  if (s.regime != Regime::pseudo_incompressible)
    throw LogicError("harvest_pi_half: state is not pseudo-incompressible");
  return half_stage(s, m, dt, plan).pi;
}

/// Supplies the next step size given the current state; returning a
/// non-positive value ends the window.
using DtSource = std::function<double(const ModelState&)>;

struct WindowResult {
  std::vector<StepLog> steps;
  std::vector<BlendEvent> events;
};

/// Runs the blended sequence from a compressible state: n_psinc_steps in the
/// pseudo-incompressible regime, conversion back with the chosen pi, then
/// compressible steps until `next_dt` ends the window. With blending disabled
/// the whole window is compressible and follows the plain code path.
/// `on_step` observes the state after every step.
inline WindowResult blended_window(ModelState& s, const Model& m, const BlendConfig& cfg,
                                   const StepPlan& plan, const DtSource& next_dt,
                                   const std::function<void(const ModelState&, const StepLog&)>&
                                       on_step = {}) {
  cfg.validate();
  WindowResult out;
  auto advance = [&](double dt) {
    const StepLog log = step(s, m, dt, plan);
    out.steps.push_back(log);
    if (on_step) on_step(s, log);
  };

  if (cfg.enabled) {
    to_psinc(s, m);
    out.events.push_back({s.t, "to_psinc", cfg.pi_choice});
    for (int k = 0; k < cfg.n_psinc_steps; ++k) {
      const double dt = next_dt(s);
      if (!(dt > 0)) break;
      advance(dt);
    }
    Field2D pi_source = s.pi;
    const double dt_next = next_dt(s);
    if (cfg.pi_choice == PiChoice::half && dt_next > 0)
      pi_source = harvest_pi_half(s, m, dt_next, plan);
    to_comp(s, pi_source, m);
    out.events.push_back({s.t, "to_comp", cfg.pi_choice});
  }
  for (;;) {
    const double dt = next_dt(s);
    if (!(dt > 0)) break;
    advance(dt);
  }
  return out;
}

}  // namespace blendda
