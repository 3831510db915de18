#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <vector>

#include "blendda/eos.hpp"
#include "blendda/errors.hpp"
#include "blendda/grid.hpp"
#include "blendda/state.hpp"

namespace blendda {

// Discrete operators between the node and cell grids.
//
// Cell gradient of a node field: average of the two edge differences,
//   gx(i,j) = [pi(i+1,j) + pi(i+1,j+1) - pi(i,j) - pi(i,j+1)] / (2 dx).
// Node divergence of a cell vector field, weighted by the node's control
// volume fraction: each existing adjacent cell contributes its corner share.
// The two are exact negative transposes: <D F, pi> = -<F, G pi>.

struct CellVector {
  Field2D x, z;
};

inline CellVector node_gradient(const Field2D& pi, const Grid& g) {
  CellVector out{make_cell_field(g), make_cell_field(g)};
  const double dx = g.dx(), dz = g.dz();
  for (int j = 0; j < g.nz(); ++j) {
    const int j0 = g.node_jz(j), j1 = g.node_jz(j + 1);
    for (int i = 0; i < g.nx(); ++i) {
      const int i0 = g.node_ix(i), i1 = g.node_ix(i + 1);
      out.x(i, j) = (pi(i1, j0) + pi(i1, j1) - pi(i0, j0) - pi(i0, j1)) / (2.0 * dx);
      out.z(i, j) = (pi(i0, j1) + pi(i1, j1) - pi(i0, j0) - pi(i1, j0)) / (2.0 * dz);
    }
  }
  return out;
}

/// Weighted node divergence (control-volume integral scaled by 1/(dx dz)).
inline Field2D node_divergence(const Field2D& Fx, const Field2D& Fz, const Grid& g) {
  Field2D d = make_node_field(g);
  const double dx = g.dx(), dz = g.dz();
  for (int j = 0; j < g.nz(); ++j) {
    const int j0 = g.node_jz(j), j1 = g.node_jz(j + 1);
    for (int i = 0; i < g.nx(); ++i) {
      const int i0 = g.node_ix(i), i1 = g.node_ix(i + 1);
      const double ax = Fx(i, j) / (2.0 * dx), az = Fz(i, j) / (2.0 * dz);
      d(i0, j0) += ax + az;
      d(i1, j0) += -ax + az;
      d(i0, j1) += ax - az;
      d(i1, j1) += -ax - az;
    }
  }
  return d;
}

inline Field2D node_weights(const Grid& g) {
  Field2D w = make_node_field(g);
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a) w(a, b) = g.node_weight(a, b);
  return w;
}

/// Unweighted (pointwise) node divergence, max norm.
inline double max_node_divergence(const Field2D& Fx, const Field2D& Fz, const Grid& g) {
  const Field2D d = node_divergence(Fx, Fz, g);
  double m = 0.0;
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a) m = std::max(m, std::abs(d(a, b)) / g.node_weight(a, b));
  return m;
}

/// Average of P over the existing cells around each node.
inline Field2D cell_to_node(const Field2D& c, const Grid& g) {
  Field2D n = make_node_field(g);
  Field2D cnt = make_node_field(g);
  for (int j = 0; j < g.nz(); ++j) {
    const int j0 = g.node_jz(j), j1 = g.node_jz(j + 1);
    for (int i = 0; i < g.nx(); ++i) {
      const int i0 = g.node_ix(i), i1 = g.node_ix(i + 1);
      for (auto [a, b] : {std::pair{i0, j0}, {i1, j0}, {i0, j1}, {i1, j1}}) {
        n(a, b) += c(i, j);
        cnt(a, b) += 1.0;
      }
    }
  }
  for (std::size_t k = 0; k < n.size(); ++k) n[k] /= cnt[k];
  return n;
}

enum class Stage { half, full };

struct SolverSettings {
  double tol = 1e-8;
  int max_iter = 1000;
};

/// Node-centred Helmholtz problem
///   helm pi - dt_sub^2 D(c G pi) = rhs
/// with per-node helm (node weight included) and per-cell coefficients cx, cz.
struct PressureProblem {
  Stage stage = Stage::half;
  Regime regime = Regime::compressible;
  double dt_sub = 0.0;
  Field2D helm;
  Field2D cx, cz;
  Field2D rhs;
  // Explicit predictors entering the momentum correction.
  Field2D Pu_in, Pw_in, theta;
  double tol = 1e-8;
  int max_iter = 1000;
};

/// Assembles the pressure problem for one corrector.
///
/// `adv` is the advected state (superscript # or **). `pi_n` is pi at time
/// level n. For the compressible full stage `Pv_n` carries the cell fluxes
/// at level n; the right-hand side then closes the trapezoidal P update
///   (dP/dpi)(pi^{n+1} - pi^n) = -(dt/2) [D(Pv)^n + D(Pv)^{n+1}].
inline PressureProblem assemble(const ModelState& adv, const Field2D& pi_n, const CellVector* Pv_n,
                                Stage stage, Regime regime, double dt, const Model& m,
                                const SolverSettings& settings = {}) {
  if (adv.regime != regime) throw LogicError("assemble: state regime differs from requested regime");
  const bool comp = regime == Regime::compressible;
  if (stage == Stage::full && comp && Pv_n == nullptr)
    throw LogicError("assemble: compressible full stage needs the level-n fluxes");
  if (stage == Stage::half && Pv_n != nullptr)
    throw LogicError("assemble: half stage takes no level-n fluxes");
  if (!(settings.tol > 0) || settings.max_iter < 1)
    throw ConfigError("solver_tol", "tolerance and iteration cap must be positive");

  const Grid& g = m.grid;
  const double dts = 0.5 * dt;
  PressureProblem pb;
  pb.stage = stage;
  pb.regime = regime;
  pb.dt_sub = dts;
  pb.tol = settings.tol;
  pb.max_iter = settings.max_iter;
  pb.cx = make_cell_field(g);
  pb.cz = make_cell_field(g);
  pb.Pu_in = make_cell_field(g);
  pb.Pw_in = make_cell_field(g);
  pb.theta = make_cell_field(g);

  for (int j = 0; j < g.nz(); ++j) {
    const double chibar = m.bg.chi_cell[j];
    for (int i = 0; i < g.nx(); ++i) {
      const double P = adv.P(i, j), rho = adv.rho(i, j);
      const double th = P / rho;
      const double Pchi_prime = rho - P * chibar;
      pb.theta(i, j) = th;
      pb.cx(i, j) = m.nd.cp * P * th;
      pb.cz(i, j) = pb.cx(i, j);
      pb.Pu_in(i, j) = th * adv.rho_u(i, j);
      pb.Pw_in(i, j) = th * adv.rho_w(i, j) - dts * m.nd.g * th * Pchi_prime;
    }
  }

  pb.helm = make_node_field(g);
  if (comp) {
    const Field2D Pn = cell_to_node(adv.P, g);
    for (int b = 0; b < g.node_nz(); ++b)
      for (int a = 0; a < g.node_nx(); ++a)
        pb.helm(a, b) =
            g.node_weight(a, b) * m.nd.Ma2 * nd::dP_dpi_of_P(Pn(a, b), m.nd.gamma);
  }

  pb.rhs = node_divergence(pb.Pu_in, pb.Pw_in, g);
  for (std::size_t k = 0; k < pb.rhs.size(); ++k) pb.rhs[k] *= -dts;
  if (comp) {
    for (std::size_t k = 0; k < pb.rhs.size(); ++k) pb.rhs[k] += pb.helm[k] * pi_n[k];
    if (stage == Stage::full) {
      const Field2D dn = node_divergence(Pv_n->x, Pv_n->z, g);
      for (std::size_t k = 0; k < pb.rhs.size(); ++k) pb.rhs[k] -= dts * dn[k];
    }
  }
  return pb;
}

/// Matrix-free application of the assembled operator.
inline Field2D apply_operator(const PressureProblem& pb, const Field2D& pi, const Grid& g) {
  CellVector gr = node_gradient(pi, g);
  for (std::size_t k = 0; k < gr.x.size(); ++k) {
    gr.x[k] *= pb.cx[k];
    gr.z[k] *= pb.cz[k];
  }
  Field2D out = node_divergence(gr.x, gr.z, g);
  const double s = pb.dt_sub * pb.dt_sub;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = pb.helm[k] * pi[k] - s * out[k];
  return out;
}

inline Eigen::SparseMatrix<double> assemble_matrix(const PressureProblem& pb, const Grid& g) {
  const int nnx = g.node_nx();
  const double s = pb.dt_sub * pb.dt_sub;
  const double dx = g.dx(), dz = g.dz();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(g.cells()) * 16 + pb.helm.size());
  for (std::size_t k = 0; k < pb.helm.size(); ++k)
    trip.emplace_back(static_cast<int>(k), static_cast<int>(k), pb.helm[k]);
  for (int j = 0; j < g.nz(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const int idx[4] = {g.node_jz(j) * nnx + g.node_ix(i), g.node_jz(j) * nnx + g.node_ix(i + 1),
                          g.node_jz(j + 1) * nnx + g.node_ix(i),
                          g.node_jz(j + 1) * nnx + g.node_ix(i + 1)};
      const double ex[4] = {-1, 1, -1, 1}, ez[4] = {-1, -1, 1, 1};
      const double ax = s * pb.cx(i, j) / (4.0 * dx * dx), az = s * pb.cz(i, j) / (4.0 * dz * dz);
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
          trip.emplace_back(idx[p], idx[q], ex[p] * ex[q] * ax + ez[p] * ez[q] * az);
    }
  }
  Eigen::SparseMatrix<double> A(static_cast<int>(pb.helm.size()), static_cast<int>(pb.helm.size()));
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

struct SolveResult {
  Field2D pi;
  int iterations = 0;
  double residual = 0.0;  ///< max-norm pointwise residual relative to the rhs
};

/// BiCGSTAB with Jacobi preconditioning. Convergence is declared once the
/// pointwise (weight-normalised) residual satisfies |r|_inf <= tol |b|_inf.
/// Without a Helmholtz term the solution is projected to zero weighted mean.
inline SolveResult solve(const PressureProblem& pb, const Grid& g, const Field2D* guess = nullptr) {
  const int n = static_cast<int>(pb.rhs.size());
  const Field2D w = node_weights(g);
  Eigen::VectorXd b(n), winv(n);
  for (int k = 0; k < n; ++k) {
    b[k] = pb.rhs[k];
    winv[k] = 1.0 / w[k];
  }
  const double bnorm = b.cwiseProduct(winv).lpNorm<Eigen::Infinity>();
  SolveResult res{make_node_field(g), 0, 0.0};
  if (bnorm == 0.0) return res;

  const Eigen::SparseMatrix<double> A = assemble_matrix(pb, g);
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> solver;
  solver.compute(A);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (guess)
    for (int k = 0; k < n; ++k) x[k] = (*guess)[k];

  auto pointwise = [&](const Eigen::VectorXd& v) {
    return (b - A * v).cwiseProduct(winv).lpNorm<Eigen::Infinity>() / bnorm;
  };
  double eigen_tol = pb.tol;
  double rel = pointwise(x);
  int used = 0;
  while (rel > pb.tol && used < pb.max_iter) {
    solver.setTolerance(eigen_tol);
    solver.setMaxIterations(pb.max_iter - used);
    x = solver.solveWithGuess(b, x);
    used += std::max<int>(1, static_cast<int>(solver.iterations()));
    rel = pointwise(x);
    if (!x.allFinite()) break;
    eigen_tol *= 0.1;
  }
  if (!(rel <= pb.tol))
    throw SolverError(rel, used, "pressure solve did not converge");

  const bool singular = pb.helm.max_abs() == 0.0;
  if (singular) {
    double sw = 0.0, swx = 0.0;
    for (int k = 0; k < n; ++k) {
      sw += w[k];
      swx += w[k] * x[k];
    }
    x.array() -= swx / sw;
  }
  for (int k = 0; k < n; ++k) res.pi[k] = x[k];
  res.iterations = used;
  res.residual = rel;
  return res;
}

struct Correction {
  Field2D Pu, Pw;  ///< corrected cell fluxes P v
};

/// Implicit momentum update (Pv)^out = (Pv)^in - dt_sub c grad pi^out.
/// Writes rho_u and rho_w.
inline Correction correct_momentum(ModelState& s, const PressureProblem& pb, const Field2D& pi_out,
                                   const Model& m) {
  const Grid& g = m.grid;
  const CellVector gr = node_gradient(pi_out, g);
  Correction c{make_cell_field(g), make_cell_field(g)};
  for (int j = 0; j < g.nz(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double th = pb.theta(i, j);
      c.Pu(i, j) = pb.Pu_in(i, j) - pb.dt_sub * pb.cx(i, j) * gr.x(i, j);
      c.Pw(i, j) = pb.Pw_in(i, j) - pb.dt_sub * pb.cz(i, j) * gr.z(i, j);
      s.rho_u(i, j) = c.Pu(i, j) / th;
      s.rho_w(i, j) = c.Pw(i, j) / th;
    }
  }
  return c;
}

}  // namespace blendda
