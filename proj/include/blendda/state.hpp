#pragma once

#include <cmath>
#include <string>

#include "blendda/background.hpp"
#include "blendda/constants.hpp"
#include "blendda/grid.hpp"

namespace blendda {

enum class Regime { compressible, pseudo_incompressible };

inline const char* to_string(Regime r) {
  return r == Regime::compressible ? "compressible" : "pseudo-incompressible";
}

/// Everything a run shares across members: grid (nondimensional
/// coordinates), constants and the hydrostatic background.
struct Model {
  Grid grid;
  PhysConstants phys;
  Nondim nd;
  HydroBackground bg;

  Model(Grid g, PhysConstants c, HydroBackground b)
      : grid(g), phys(c), nd(Nondim::from(c)), bg(std::move(b)) {}
};

/// Prognostic state, nondimensional.
///
/// rho, rho_u, rho_w and P live on cells. pi lives on nodes and holds the
/// first-order Exner perturbation pi^(1), related to the dimensionless
/// perturbation by pi' = Ma^2 pi^(1).
struct ModelState {
  Field2D rho, rho_u, rho_w, P;
  Field2D pi;
  double t = 0.0;
  Regime regime = Regime::compressible;

  ModelState() = default;
  explicit ModelState(const Grid& g)
      : rho(make_cell_field(g)), rho_u(make_cell_field(g)), rho_w(make_cell_field(g)),
        P(make_cell_field(g)), pi(make_node_field(g)) {}

  /// Throws DomainError unless rho and P are positive and finite everywhere.
  void check_positive() const {
    for (std::size_t k = 0; k < rho.size(); ++k) {
      if (!(rho[k] > 0) || !std::isfinite(rho[k]))
        throw DomainError("non-positive density in cell " + std::to_string(k));
      if (!(P[k] > 0) || !std::isfinite(P[k]))
        throw DomainError("non-positive P in cell " + std::to_string(k));
    }
  }

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// The same fields in SI units; pi holds the dimensionless perturbation pi'.
struct SIState {
  Field2D rho, rho_u, rho_w, P, pi;
  double t = 0.0;
  Regime regime = Regime::compressible;
};

inline SIState to_si(const ModelState& s, const PhysConstants& c) {
  SIState o{s.rho, s.rho_u, s.rho_w, s.P, s.pi, s.t * c.t_ref(), s.regime};
  const double mom = c.rho_ref() * c.u_ref();
  const double Ma2 = c.Ma() * c.Ma();
  for (auto& v : o.rho.values()) v *= c.rho_ref();
  for (auto& v : o.rho_u.values()) v *= mom;
  for (auto& v : o.rho_w.values()) v *= mom;
  for (auto& v : o.P.values()) v *= c.P_ref();
  for (auto& v : o.pi.values()) v *= Ma2;
  return o;
}

inline ModelState nondimensionalise(const SIState& s, const PhysConstants& c) {
  ModelState o;
  o.rho = s.rho;
  o.rho_u = s.rho_u;
  o.rho_w = s.rho_w;
  o.P = s.P;
  o.pi = s.pi;
  o.t = s.t / c.t_ref();
  o.regime = s.regime;
  const double mom = c.rho_ref() * c.u_ref();
  const double Ma2 = c.Ma() * c.Ma();
  for (auto& v : o.rho.values()) v /= c.rho_ref();
  for (auto& v : o.rho_u.values()) v /= mom;
  for (auto& v : o.rho_w.values()) v /= mom;
  for (auto& v : o.P.values()) v /= c.P_ref();
  for (auto& v : o.pi.values()) v /= Ma2;
  return o;
}

/// 4-node average of pi at cell (i, j).
inline double node_avg(const Field2D& pi, const Grid& g, int i, int j) {
  const int i0 = g.node_ix(i), i1 = g.node_ix(i + 1);
  const int j0 = g.node_jz(j), j1 = g.node_jz(j + 1);
  return 0.25 * (pi(i0, j0) + pi(i1, j0) + pi(i0, j1) + pi(i1, j1));
}

/// Full pressure per cell, nondimensional. In the compressible regime P
/// carries the pressure directly; in the pseudo-incompressible regime P is
/// the background-like field and the perturbation comes from pi.
inline double cell_pressure(const ModelState& s, const Model& m, int i, int j) {
  const double gamma = m.nd.gamma;
  const double P = s.P(i, j);
  if (s.regime == Regime::compressible) return std::pow(P, gamma);
  const double ex = std::pow(P, gamma - 1.0) + m.nd.Ma2 * node_avg(s.pi, m.grid, i, j);
  if (!(ex > 0)) throw DomainError("non-positive Exner pressure in pressure diagnostic");
  return std::pow(ex, gamma / (gamma - 1.0));
}

}  // namespace blendda
