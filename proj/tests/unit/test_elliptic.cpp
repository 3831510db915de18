#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "blendda/advect.hpp"
#include "blendda/elliptic.hpp"

using namespace blendda;

namespace {

constexpr double kPi = std::numbers::pi;

Model make_model(int nx, int nz, Boundary bx, Boundary bz, double g = 0.0) {
  Grid grid(nx, nz, 0.0, 1.0, 0.0, 1.0, bx, bz);
  const auto c = PhysConstants::dry_air(g, 100.0);
  return Model(grid, c, build_hydrostatic_background([](double) { return 300.0; }, grid, c));
}

ModelState uniform_state(const Grid& g, Regime r) {
  ModelState s(g);
  s.rho.fill(1.0);
  s.P.fill(1.0);
  s.regime = r;
  return s;
}

void randomise(Field2D& f, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (auto& v : f.values()) v = U(rng);
}

}  // namespace

TEST(Operators, DivergenceIsNegativeTransposeOfGradient) {
  for (auto bz : {Boundary::periodic, Boundary::wall}) {
    for (auto bx : {Boundary::periodic, Boundary::wall}) {
      Grid g(13, 9, 0.0, 1.3, 0.0, 0.7, bx, bz);
      std::mt19937_64 rng(11);
      Field2D Fx = make_cell_field(g), Fz = make_cell_field(g), pi = make_node_field(g);
      randomise(Fx, rng);
      randomise(Fz, rng);
      randomise(pi, rng);
      const Field2D d = node_divergence(Fx, Fz, g);
      const CellVector gr = node_gradient(pi, g);
      double lhs = 0.0, rhs = 0.0, scale = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) lhs += d[k] * pi[k];
      for (std::size_t k = 0; k < Fx.size(); ++k) {
        rhs -= Fx[k] * gr.x[k] + Fz[k] * gr.z[k];
        scale += std::abs(Fx[k] * gr.x[k]) + std::abs(Fz[k] * gr.z[k]);
      }
      EXPECT_NEAR(lhs, rhs, 1e-12 * scale);
    }
  }
}

TEST(Operators, FaceDivergenceAveragesCornerNodeDivergences) {
  for (auto bz : {Boundary::periodic, Boundary::wall}) {
    Grid g(10, 8, 0.0, 1.0, 0.0, 1.0, Boundary::periodic, bz);
    std::mt19937_64 rng(5);
    Field2D Pu = make_cell_field(g), Pw = make_cell_field(g);
    randomise(Pu, rng);
    randomise(Pw, rng);
    const Field2D cell_div = face_divergence(face_fluxes(Pu, Pw, g), g);
    const Field2D node_div = node_divergence(Pu, Pw, g);
    for (int j = 0; j < g.nz(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        double avg = 0.0;
        for (int dj = 0; dj <= 1; ++dj)
          for (int di = 0; di <= 1; ++di) {
            const int a = g.node_ix(i + di), b = g.node_jz(j + dj);
            avg += 0.25 * node_div(a, b) / g.node_weight(a, b);
          }
        EXPECT_NEAR(cell_div(i, j), avg, 1e-11);
      }
  }
}

TEST(Assemble, QuiescentCompressibleHalfStageKeepsPi) {
  const Model m = make_model(12, 10, Boundary::periodic, Boundary::wall);
  ModelState s = uniform_state(m.grid, Regime::compressible);
  std::mt19937_64 rng(2);
  Field2D pin = make_node_field(m.grid, 0.3);
  const auto pb = assemble(s, pin, nullptr, Stage::half, Regime::compressible, 0.01, m);
  const auto sol = solve(pb, m.grid);
  for (std::size_t k = 0; k < pin.size(); ++k) EXPECT_NEAR(sol.pi[k], 0.3, 1e-8 * 0.3);
}

TEST(Assemble, DivergenceFreePsincHalfStageHasZeroSolution) {
  const Model m = make_model(12, 12, Boundary::periodic, Boundary::periodic);
  ModelState s = uniform_state(m.grid, Regime::pseudo_incompressible);
  s.rho_u.fill(0.4);  // uniform flow is divergence free
  const auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::pseudo_incompressible, 0.01, m);
  EXPECT_LT(pb.rhs.max_abs(), 1e-14);
  EXPECT_EQ(pb.helm.max_abs(), 0.0);
  const auto sol = solve(pb, m.grid);
  EXPECT_EQ(sol.pi.max_abs(), 0.0);
}

TEST(Assemble, InconsistentStageRegimeIsLogicError) {
  const Model m = make_model(6, 6, Boundary::periodic, Boundary::periodic);
  ModelState s = uniform_state(m.grid, Regime::compressible);
  EXPECT_THROW(assemble(s, s.pi, nullptr, Stage::full, Regime::compressible, 0.01, m), LogicError);
  EXPECT_THROW(assemble(s, s.pi, nullptr, Stage::half, Regime::pseudo_incompressible, 0.01, m),
               LogicError);
}

namespace {

// Operator image of pi = sin(2 pi x) sin(2 pi z) with uniform coefficients:
// helm pi + dt^2 c 8 pi^2 pi.
double manufactured_operator_error(int n) {
  const Model m = make_model(n, n, Boundary::periodic, Boundary::periodic);
  ModelState s = uniform_state(m.grid, Regime::compressible);
  const double dt = 0.02;
  const auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::compressible, dt, m);
  const Grid& g = m.grid;
  Field2D pi = make_node_field(g);
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a)
      pi(a, b) = std::sin(2 * kPi * g.node_x(a)) * std::sin(2 * kPi * g.node_z(b));
  const Field2D Api = apply_operator(pb, pi, g);
  const double c = pb.cx[0], h = pb.helm[0], ds = 0.5 * dt;
  double err = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k)
    err = std::max(err, std::abs(Api[k] - (h + ds * ds * c * 8 * kPi * kPi) * pi[k]));
  return err;
}

}  // namespace

TEST(Assemble, ManufacturedSolutionSecondOrder) {
  const double e16 = manufactured_operator_error(16);
  const double e32 = manufactured_operator_error(32);
  const double e64 = manufactured_operator_error(64);
  EXPECT_GT(std::log2(e16 / e32), 1.9);
  EXPECT_GT(std::log2(e32 / e64), 1.9);
}

TEST(Assemble, SparseMatrixMatchesMatrixFreeOperator) {
  const Model m = make_model(9, 7, Boundary::periodic, Boundary::wall);
  ModelState s = uniform_state(m.grid, Regime::compressible);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.8, 1.2);
  for (auto& v : s.P.values()) v = U(rng);
  for (auto& v : s.rho.values()) v = U(rng);
  const auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::compressible, 0.05, m);
  Field2D x = make_node_field(m.grid);
  randomise(x, rng);
  const Field2D y = apply_operator(pb, x, m.grid);
  const auto A = assemble_matrix(pb, m.grid);
  Eigen::VectorXd xv(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) xv[k] = x[k];
  const Eigen::VectorXd yv = A * xv;
  for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(yv[k], y[k], 1e-12);
}

namespace {

double manufactured_solve_error(int n, Boundary bz) {
  const Model m = make_model(n, n, Boundary::periodic, bz);
  const Grid& g = m.grid;
  ModelState s = uniform_state(g, Regime::pseudo_incompressible);
  auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::pseudo_incompressible, 0.02, m);
  pb.tol = 1e-10;
  pb.max_iter = 5000;
  // Exact field: cos in z satisfies the homogeneous Neumann condition at walls.
  Field2D exact = make_node_field(g);
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a)
      exact(a, b) = std::sin(2 * kPi * g.node_x(a)) * std::cos(2 * kPi * g.node_z(b));
  const double ds = pb.dt_sub, c = pb.cx[0];
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a)
      pb.rhs(a, b) = g.node_weight(a, b) * ds * ds * c * 8 * kPi * kPi * exact(a, b);
  const auto sol = solve(pb, g);
  // Remove the gauge before comparing.
  double mean_e = 0.0, mean_s = 0.0, wsum = 0.0;
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a) {
      const double w = g.node_weight(a, b);
      mean_e += w * exact(a, b);
      mean_s += w * sol.pi(a, b);
      wsum += w;
    }
  double err = 0.0;
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a)
      err = std::max(err, std::abs(sol.pi(a, b) - mean_s / wsum - (exact(a, b) - mean_e / wsum)));
  return err;
}

}  // namespace

TEST(Solve, ManufacturedPoissonConvergesAtSecondOrder) {
  for (auto bz : {Boundary::periodic, Boundary::wall}) {
    const double e16 = manufactured_solve_error(16, bz);
    const double e32 = manufactured_solve_error(32, bz);
    const double e64 = manufactured_solve_error(64, bz);
    EXPECT_GT(std::log2(e16 / e32), 1.7);
    EXPECT_GT(std::log2(e32 / e64), 1.7);
    EXPECT_LT(e64, 5e-3);
  }
}

TEST(Solve, DiagonalLimit) {
  const Model m = make_model(8, 8, Boundary::periodic, Boundary::periodic);
  ModelState s = uniform_state(m.grid, Regime::compressible);
  auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::compressible, 1e-3, m);
  std::mt19937_64 rng(9);
  for (auto& v : pb.helm.values()) v = 1e8;
  randomise(pb.rhs, rng);
  const auto sol = solve(pb, m.grid);
  for (std::size_t k = 0; k < pb.rhs.size(); ++k) EXPECT_NEAR(sol.pi[k], pb.rhs[k] / 1e8, 1e-14);
}

TEST(Solve, ZeroRhsPoissonGivesZero) {
  const Model m = make_model(8, 8, Boundary::periodic, Boundary::wall);
  ModelState s = uniform_state(m.grid, Regime::pseudo_incompressible);
  const auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::pseudo_incompressible, 0.1, m);
  const auto sol = solve(pb, m.grid);
  EXPECT_EQ(sol.pi.max_abs(), 0.0);
}

TEST(Solve, NonConvergenceReportsResidual) {
  const Model m = make_model(32, 32, Boundary::periodic, Boundary::periodic);
  ModelState s = uniform_state(m.grid, Regime::pseudo_incompressible);
  std::mt19937_64 rng(8);
  randomise(s.rho_u, rng);
  randomise(s.rho_w, rng);
  auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::pseudo_incompressible, 0.1, m);
  pb.max_iter = 2;
  try {
    solve(pb, m.grid);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), pb.tol);
    EXPECT_LE(e.iterations(), 2);
  }
}

TEST(Correct, ConstantPiLeavesMomentaUnchanged) {
  const Model m = make_model(8, 6, Boundary::periodic, Boundary::wall);
  ModelState s = uniform_state(m.grid, Regime::compressible);
  s.rho_u.fill(0.3);
  s.rho_w.fill(-0.1);
  const auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::compressible, 0.1, m);
  ModelState out = s;
  correct_momentum(out, pb, make_node_field(m.grid, 4.2), m);
  for (std::size_t k = 0; k < s.rho.size(); ++k) {
    EXPECT_NEAR(out.rho_u[k], 0.3, 1e-15);
    EXPECT_NEAR(out.rho_w[k], -0.1, 1e-15);
  }
}

TEST(Correct, LinearRampGivesUniformDecrement) {
  // 4 cells along x between walls; pi = slope * x at nodes.
  Model m = make_model(4, 2, Boundary::wall, Boundary::wall);
  ModelState s = uniform_state(m.grid, Regime::compressible);
  const double slope = 0.7, dt = 0.2;
  const auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::compressible, dt, m);
  Field2D pi = make_node_field(m.grid);
  for (int b = 0; b < m.grid.node_nz(); ++b)
    for (int a = 0; a < m.grid.node_nx(); ++a) pi(a, b) = slope * m.grid.node_x(a);
  ModelState out = s;
  correct_momentum(out, pb, pi, m);
  // P = rho = 1 so P Theta = 1; decrement = (dt/2) c_p slope.
  const double cp = 1.4 / 0.4;
  for (std::size_t k = 0; k < s.rho.size(); ++k) {
    EXPECT_NEAR(out.rho_u[k], -0.5 * dt * cp * slope, 1e-14);
    EXPECT_NEAR(out.rho_w[k], 0.0, 1e-14);
  }
}

TEST(Correct, PsincCorrectionRemovesDivergence) {
  for (auto bz : {Boundary::periodic, Boundary::wall}) {
    const Model m = make_model(24, 20, Boundary::periodic, bz);
    ModelState s = uniform_state(m.grid, Regime::pseudo_incompressible);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.8, 1.2);
    for (auto& v : s.rho.values()) v = U(rng);
    for (auto& v : s.P.values()) v = U(rng);
    randomise(s.rho_u, rng);
    randomise(s.rho_w, rng);
    const auto pb = assemble(s, s.pi, nullptr, Stage::half, Regime::pseudo_incompressible, 0.05, m);
    const auto sol = solve(pb, m.grid);
    ModelState out = s;
    const Correction c = correct_momentum(out, pb, sol.pi, m);
    const double before = max_node_divergence(pb.Pu_in, pb.Pw_in, m.grid);
    const double after = max_node_divergence(c.Pu, c.Pw, m.grid);
    EXPECT_LE(after, 10 * pb.tol * before);
    // Face divergence of the advecting fluxes vanishes as well.
    const Field2D fd = face_divergence(face_fluxes(c.Pu, c.Pw, m.grid), m.grid);
    EXPECT_LE(fd.max_abs(), 10 * pb.tol * before);
  }
}
