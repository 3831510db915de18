#include <gtest/gtest.h>

#include <cmath>

#include "blendda/cases.hpp"
#include "blendda/diagnostics.hpp"

using namespace blendda;

TEST(RelativeError, Basics) {
  const std::vector<double> ref{1.0, -2.0, 3.0};
  EXPECT_DOUBLE_EQ(relative_error(ref, ref), 0.0);
  EXPECT_DOUBLE_EQ(relative_error({2.0, -4.0, 6.0}, ref), 1.0);
  EXPECT_NEAR(relative_error({3.0, -6.0, 9.0}, {1.5, -3.0, 4.5}),
              relative_error({2.0, -4.0, 6.0}, ref), 1e-15);
  EXPECT_THROW(relative_error({1.0}, {0.0}), DomainError);
  EXPECT_THROW(relative_error({1.0, 2.0}, {1.0}), LogicError);
}

TEST(ProbeSeries, IncrementsSkipTheFirstStep) {
  ProbeSeries p;
  p.values = {10.0, 11.0, 13.0, 16.0};
  EXPECT_EQ(p.increments(), (std::vector<double>{2.0, 3.0}));
  EXPECT_EQ(p.increments(false), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Rmse, ToyEnsemble) {
  const Model m = vortex_model(4, 4);
  ModelState truth(m.grid), a(m.grid), b(m.grid);
  truth.rho.fill(1.0);
  a.rho.fill(0.0);
  b.rho.fill(2.0);
  EXPECT_NEAR(rmse({a, b}, truth, Variable::rho, m), m.phys.rho_ref(), 1e-12);
  ModelState c = truth;
  c.rho_u.fill(0.25);
  EXPECT_NEAR(rmse({c, c}, truth, Variable::rho_u, m), 0.25 * m.phys.rho_ref() * m.phys.u_ref(),
              1e-12);
  EXPECT_THROW(rmse({}, truth, Variable::rho, m), LogicError);
}

TEST(Rmse, PiInPerturbationUnits) {
  const Model m = vortex_model(4, 4);
  ModelState truth(m.grid), a(m.grid);
  a.pi.fill(1.0);
  EXPECT_NEAR(rmse({a}, truth, Variable::pi, m), m.phys.Ma() * m.phys.Ma(), 1e-15);
}

TEST(Imbalance, AcousticTime) {
  EXPECT_NEAR(acoustic_time(11, 156.25, 347.0), 2.4766, 1e-4);
}

TEST(Imbalance, NoVelocityIncrementGivesZero) {
  const Model m = vortex_model(16, 16);
  const ModelState s = init_vortex(m, 0.0, 0.0);
  ModelState moved = s;
  moved.P.fill(1.1);
  moved.rho.fill(0.9);
  for (std::size_t q = 0; q < s.rho.size(); ++q) {
    moved.rho_u[q] = s.rho_u[q] / s.rho[q] * moved.rho[q];
    moved.rho_w[q] = s.rho_w[q] / s.rho[q] * moved.rho[q];
  }
  EXPECT_NEAR(imbalance_estimate({s, s}, {moved, moved}, m, 11), 0.0, 1e-12);
}

TEST(Imbalance, UniformVelocityShiftGivesZero) {
  const Model m = vortex_model(16, 16);
  const ModelState s = init_vortex(m, 0.0, 0.0);
  ModelState post = s;
  for (std::size_t q = 0; q < s.rho.size(); ++q) post.rho_u[q] += 0.1 * s.rho[q];
  EXPECT_NEAR(imbalance_estimate({s}, {post}, m, 11), 0.0, 1e-9);
}

TEST(Imbalance, ScalesWithRegion) {
  const Model m = vortex_model(16, 16);
  const ModelState s = init_vortex(m, 0.0, 0.0);
  ModelState post = s;
  for (int j = 0; j < m.grid.nz(); ++j)
    for (int i = 0; i < m.grid.nx(); ++i)
      post.rho_u(i, j) += 0.05 * std::sin(2 * M_PI * i / 16.0) * s.rho(i, j);
  const double e11 = imbalance_estimate({s}, {post}, m, 11);
  const double e21 = imbalance_estimate({s}, {post}, m, 21);
  EXPECT_GT(e11, 0.0);
  EXPECT_NEAR(e21 / e11, 21.0 / 11.0, 1e-12);
}

TEST(Probe, RecordsPressureInPascal) {
  const Model m = vortex_model(16, 16);
  ModelState s(m.grid);
  s.rho.fill(1.0);
  s.P.fill(1.0);
  Probe p("c", 3.0, 4.0, ProbeVariable::p, m);
  p.record(s);
  EXPECT_NEAR(p.series().values[0], 1.0e5, 1e-8);
  Probe q("c", 3.0, 4.0, ProbeVariable::p_prime, m);
  q.record(s);
  EXPECT_NEAR(q.series().values[0], 0.0, 1e-8);
}
