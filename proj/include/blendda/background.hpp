#pragma once

#include <functional>
#include <vector>

#include "blendda/constants.hpp"
#include "blendda/grid.hpp"

namespace blendda {

/// Horizontally homogeneous hydrostatic background, nondimensional.
///
/// Node levels j = 0..Nz sit on cell faces, cell levels j = 0..Nz-1 at cell
/// centres. pi_node is the full Exner pressure; P = pi^(1/(gamma-1)),
/// chi = 1/Theta and rho = P chi.
struct HydroBackground {
  std::vector<double> pi_node, P_node, chi_node, rho_node;
  std::vector<double> pi_cell, P_cell, chi_cell, rho_cell;
};

/// Integrates dpi/dz = -g/(c_p Theta) upward from pi(z_min) = 1 with the
/// midpoint rule, so each cell-centre Theta sets the Exner drop across its
/// cell. `theta` maps height in metres to potential temperature in kelvin.
inline HydroBackground build_hydrostatic_background(const std::function<double(double)>& theta,
                                                    const Grid& grid, const PhysConstants& c) {
  const Nondim nd = Nondim::from(c);
  const int nz = grid.nz();
  const double dz = grid.dz();
  const double gm1 = c.gamma() - 1.0;
  const double Gamma = gm1 / c.gamma();
  auto chi_at = [&](double z_nd) {
    const double th = theta(z_nd * c.h_ref());
    if (!(th > 0)) throw DomainError("background potential temperature must be positive");
    return c.T_ref() / th;
  };

  HydroBackground bg;
  bg.pi_node.resize(nz + 1);
  bg.chi_node.resize(nz + 1);
  bg.chi_cell.resize(nz);
  bg.pi_node[0] = 1.0;
  for (int j = 0; j < nz; ++j) {
    bg.chi_cell[j] = chi_at(grid.cell_z(j));
    bg.pi_node[j + 1] = bg.pi_node[j] - Gamma * nd.Ma2 * nd.g * dz * bg.chi_cell[j];
  }
  for (int j = 0; j <= nz; ++j) bg.chi_node[j] = chi_at(grid.node_z(j));

  bg.P_node.resize(nz + 1);
  bg.rho_node.resize(nz + 1);
  for (int j = 0; j <= nz; ++j) {
    if (!(bg.pi_node[j] > 0)) throw DomainError("background Exner pressure became non-positive");
    bg.P_node[j] = std::pow(bg.pi_node[j], 1.0 / gm1);
    bg.rho_node[j] = bg.P_node[j] * bg.chi_node[j];
  }
  bg.pi_cell.resize(nz);
  bg.P_cell.resize(nz);
  bg.rho_cell.resize(nz);
  for (int j = 0; j < nz; ++j) {
    bg.pi_cell[j] = 0.5 * (bg.pi_node[j] + bg.pi_node[j + 1]);
    bg.P_cell[j] = std::pow(bg.pi_cell[j], 1.0 / gm1);
    bg.rho_cell[j] = bg.P_cell[j] * bg.chi_cell[j];
  }
  return bg;
}

}  // namespace blendda
