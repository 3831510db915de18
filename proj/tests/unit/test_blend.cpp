#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "blendda/cases.hpp"
#include "blendda/blend.hpp"

using namespace blendda;

namespace {

ModelState random_valid_state(const Model& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ModelState s(m.grid);
  for (std::size_t q = 0; q < s.P.size(); ++q) {
    s.rho[q] = 1.0 + 0.3 * U(rng);
    s.P[q] = 1.0 + 0.1 * U(rng);
    s.rho_u[q] = s.rho[q] * U(rng);
    s.rho_w[q] = s.rho[q] * U(rng);
  }
  for (auto& v : s.pi.values()) v = 2.0 * U(rng);
  return s;
}

Model scalar_model() {
  Model m = vortex_model(2, 2);
  m.nd.Ma2 = 0.1163;
  return m;
}

}  // namespace

TEST(Convert, RoundTripIsIdentity) {
  const Model m = vortex_model(16, 12);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    ModelState s = random_valid_state(m, rng);
    const ModelState orig = s;
    to_psinc(s, m);
    EXPECT_EQ(s.regime, Regime::pseudo_incompressible);
    to_comp(s, orig.pi, m);
    for (std::size_t q = 0; q < s.P.size(); ++q) {
      EXPECT_NEAR(s.P[q], orig.P[q], 1e-13 * orig.P[q]);
      EXPECT_NEAR(s.rho_u[q], orig.rho_u[q], 1e-13 * std::abs(orig.rho[q]));
    }
  }
}

TEST(Convert, ScalarExample) {
  const Model m = scalar_model();
  ModelState s(m.grid);
  s.rho.fill(1.0);
  s.P.fill(1.0);
  s.pi.fill(0.01);
  to_psinc(s, m);
  EXPECT_NEAR(s.P(0, 0), std::pow(1.0 - 0.001163, 2.5), 1e-15);
}

TEST(Convert, KeepsThetaAndVelocity) {
  const Model m = vortex_model(8, 8);
  std::mt19937_64 rng(3);
  ModelState s = random_valid_state(m, rng);
  const ModelState orig = s;
  to_psinc(s, m);
  for (std::size_t q = 0; q < s.P.size(); ++q) {
    EXPECT_NEAR(s.P[q] / s.rho[q], orig.P[q] / orig.rho[q], 1e-14);
    EXPECT_NEAR(s.rho_u[q] / s.rho[q], orig.rho_u[q] / orig.rho[q], 1e-14);
  }
}

TEST(Convert, ZeroMachOrZeroPiLeavesPUnchanged) {
  Model m = vortex_model(8, 8);
  std::mt19937_64 rng(4);
  ModelState s = random_valid_state(m, rng);
  ModelState a = s;
  a.pi.fill(0.0);
  const Field2D P0 = a.P;
  to_psinc(a, m);
  m.nd.Ma2 = 0.0;
  ModelState b = s;
  to_psinc(b, m);
  for (std::size_t q = 0; q < s.P.size(); ++q) {
    EXPECT_NEAR(a.P[q], P0[q], 1e-15 * P0[q]);
    EXPECT_NEAR(b.P[q], s.P[q], 1e-15 * s.P[q]);
  }
}

TEST(Convert, LargerMachLowersPWherePiPositive) {
  Model lo = vortex_model(8, 8), hi = lo;
  hi.nd.Ma2 = 2.0 * lo.nd.Ma2;
  ModelState s(lo.grid);
  s.rho.fill(1.0);
  s.P.fill(1.0);
  s.pi.fill(0.5);
  ModelState a = s, b = s;
  to_psinc(a, lo);
  to_psinc(b, hi);
  for (std::size_t q = 0; q < s.P.size(); ++q) EXPECT_LT(b.P[q], a.P[q]);
}

TEST(Convert, NonPositiveRadicandThrows) {
  const Model m = scalar_model();
  ModelState s(m.grid);
  s.rho.fill(1.0);
  s.P.fill(1.0);
  s.pi.fill(1.0 / 0.1163 + 1.0);
  EXPECT_THROW(to_psinc(s, m), ConversionError);
}

TEST(Convert, WrongRegimeIsLogicError) {
  const Model m = vortex_model(4, 4);
  ModelState s = init_vortex(m, 0.0, 0.0);
  EXPECT_THROW(to_comp(s, s.pi, m), LogicError);
  to_psinc(s, m);
  EXPECT_THROW(to_psinc(s, m), LogicError);
}

TEST(Window, DisabledIsBitwisePlainCompressible) {
  const Model m = vortex_model(16, 16);
  const StepPlan plan = vortex_plan();
  ModelState a = init_vortex_imbalanced(m, 0.0, 0.0), b = a;
  int n = 0;
  DtSource next = [&](const ModelState&) { return n++ < 5 ? 0.002 : -1.0; };
  BlendConfig cfg;
  cfg.enabled = false;
  const WindowResult w = blended_window(a, m, cfg, plan, next);
  for (int k = 0; k < 5; ++k) step(b, m, 0.002, plan);
  EXPECT_TRUE(w.events.empty());
  EXPECT_EQ(a, b);
}

TEST(Window, EnabledLogsBothConversions) {
  const Model m = vortex_model(16, 16);
  // Time-based so the extra query made for pi_half does not count as a step.
  DtSource next = [](const ModelState& s) { return s.t < 0.006 - 1e-12 ? 0.002 : -1.0; };
  BlendConfig cfg;
  cfg.pi_choice = PiChoice::full;
  ModelState s = init_vortex_imbalanced(m, 0.0, 0.0);
  const WindowResult w = blended_window(s, m, cfg, vortex_plan(), next);
  ASSERT_EQ(w.events.size(), 2u);
  EXPECT_EQ(w.events[0].direction, "to_psinc");
  EXPECT_EQ(w.events[1].direction, "to_comp");
  EXPECT_EQ(w.steps.size(), 3u);
  EXPECT_EQ(w.steps[0].regime, Regime::pseudo_incompressible);
  EXPECT_EQ(w.steps[1].regime, Regime::compressible);
  EXPECT_EQ(s.regime, Regime::compressible);
}

TEST(Window, HarvestDoesNotMoveClock) {
  const Model m = vortex_model(16, 16);
  ModelState s = init_vortex(m, 0.0, 0.0);
  to_psinc(s, m);
  const ModelState before = s;
  const Field2D pi = harvest_pi_half(s, m, 0.002, vortex_plan());
  EXPECT_EQ(s, before);
  EXPECT_EQ(pi.size(), s.pi.size());
}

TEST(Window, InvalidStepCountIsConfigError) {
  const Model m = vortex_model(8, 8);
  ModelState s = init_vortex(m, 0.0, 0.0);
  BlendConfig cfg;
  cfg.n_psinc_steps = 0;
  EXPECT_THROW(blended_window(s, m, cfg, vortex_plan(), [](const ModelState&) { return -1.0; }),
               ConfigError);
}
