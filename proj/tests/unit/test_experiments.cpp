#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "blendda/experiments.hpp"

using namespace blendda;

namespace {

ScenarioSpec tiny_vortex(Mode mode) {
  ScenarioSpec s = ScenarioSpec::vortex(mode);
  s.nx = s.nz = 16;
  s.K = 4;
  s.t_first = 5.0;
  s.dt_obs = 5.0;
  s.t_final = 10.0;
  s.output_dt = 5.0;
  s.letkf.region = 5;
  return s;
}

}  // namespace

TEST(Draws, HalfOpenRange) {
  auto rng = substream(7, stream_init);
  for (int n = 0; n < 10000; ++n) {
    const double x = draw_half_open(rng, -1.0, 1.0);
    EXPECT_GE(x, -1.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(Draws, SubstreamsAreIndependentAndDeterministic) {
  auto a = substream(1, stream_init), b = substream(1, stream_init), c = substream(1, stream_obs);
  EXPECT_EQ(a(), b());
  EXPECT_NE(substream(1, stream_init)(), c());
  EXPECT_NE(substream(1, stream_init)(), substream(2, stream_init)());
}

TEST(Ensemble, VortexCentresWithinOneKilometre) {
  const ScenarioSpec spec = tiny_vortex(Mode::EnNoDA);
  const Model m = scenario_model(spec);
  const EnsembleSetup e = make_ensemble(spec, m);
  ASSERT_EQ(e.members.size(), 4u);
  ASSERT_EQ(e.draws.size(), 5u);
  for (const auto& d : e.draws) {
    EXPECT_GE(d[0], -1000.0);
    EXPECT_LT(d[0], 1000.0);
    EXPECT_GE(d[1], -1000.0);
    EXPECT_LT(d[1], 1000.0);
  }
  EXPECT_FALSE(e.obs_is_truth);
  const EnsembleSetup again = make_ensemble(spec, m);
  EXPECT_EQ(again.draws, e.draws);
  EXPECT_NE(e.truth, detail::ensemble_mean(e.members));
}

TEST(Ensemble, BubbleAmplitudesInRange) {
  ScenarioSpec spec = ScenarioSpec::bubble(Mode::EnNoDA);
  spec.nx = 40;
  spec.nz = 20;
  const Model m = scenario_model(spec);
  const EnsembleSetup e = make_ensemble(spec, m);
  for (const auto& d : e.draws) {
    EXPECT_GE(d[0], 2.0);
    EXPECT_LT(d[0], 12.0);
  }
  EXPECT_TRUE(e.obs_is_truth);
}

TEST(Ensemble, TooSmallIsConfigError) {
  ScenarioSpec spec = tiny_vortex(Mode::EnDA);
  spec.K = 1;
  EXPECT_THROW(make_ensemble(spec, scenario_model(spec)), ConfigError);
}

TEST(Cases, VortexPeakSwirlIsTwentyFiveMetresPerSecond) {
  const Model m = vortex_model(128, 128);
  const ModelState s = init_vortex(m, 0.0, 0.0);
  double vmax = 0.0;
  for (std::size_t q = 0; q < s.rho.size(); ++q) {
    const double du = s.rho_u[q] / s.rho[q] * m.phys.u_ref() - 100.0;
    const double dw = s.rho_w[q] / s.rho[q] * m.phys.u_ref() - 100.0;
    vmax = std::max(vmax, std::hypot(du, dw));
  }
  EXPECT_NEAR(vmax, 25.0, 0.5);
}

TEST(Cases, BubblePotentialTemperature) {
  const Model m = bubble_model(160, 80);
  const ModelState s = init_bubble(m, 2.0);
  double th_max = 0.0;
  for (int j = 0; j < m.grid.nz(); ++j)
    for (int i = 0; i < m.grid.nx(); ++i) {
      const double th = s.P(i, j) / s.rho(i, j) * m.phys.T_ref();
      th_max = std::max(th_max, th);
      const double r = std::hypot(m.grid.cell_x(i), m.grid.cell_z(j) - 0.2) * m.phys.h_ref();
      if (r > 2000.0) EXPECT_NEAR(th, 300.0, 1e-10);
    }
  EXPECT_NEAR(th_max, 302.0, 0.01);
}

TEST(Observations, MaskCountAndExactValues) {
  ScenarioSpec spec = tiny_vortex(Mode::EnDA);
  spec.noise_frac = 0.0;
  spec.letkf.observed_vars = {Variable::rho, Variable::rho_u};
  const Model m = scenario_model(spec);
  const ModelState truth = init_vortex(m, 100.0, 0.0);
  auto rng = substream(3, stream_obs);
  const ObservationBatch b = gen_observations(truth, m, spec, rng, 5.0);
  ASSERT_EQ(b.blocks.size(), 2u);
  EXPECT_EQ(b.blocks[0].indices.size(), std::size_t(std::ceil(0.1 * 256)));
  EXPECT_EQ(b.blocks[0].indices, b.blocks[1].indices);
  EXPECT_EQ(std::set<int>(b.blocks[0].indices.begin(), b.blocks[0].indices.end()).size(),
            b.blocks[0].indices.size());
  for (const auto& blk : b.blocks)
    for (std::size_t k = 0; k < blk.indices.size(); ++k)
      EXPECT_EQ(blk.values[k], field(truth, blk.var)[blk.indices[k]]);
}

TEST(Observations, NoiseStandardDeviation) {
  ScenarioSpec spec = tiny_vortex(Mode::EnDA);
  spec.obs_fraction = 1.0;
  spec.noise_frac = 0.05;
  spec.letkf.observed_vars = {Variable::rho_u};
  const Model m = scenario_model(spec);
  const ModelState truth = init_vortex(m, 0.0, 0.0);
  const Field2D& f = truth.rho_u;
  const double sd = 0.05 * (f.max() - f.min());
  auto rng = substream(9, stream_obs);
  double acc = 0.0;
  int n = 0;
  while (n < 10000) {
    const ObservationBatch b = gen_observations(truth, m, spec, rng, 0.0);
    for (std::size_t k = 0; k < b.blocks[0].indices.size(); ++k, ++n) {
      const double e = b.blocks[0].values[k] - f[b.blocks[0].indices[k]];
      acc += e * e;
    }
    EXPECT_NEAR(b.blocks[0].noise_std[0], sd, 1e-15);
  }
  EXPECT_NEAR(std::sqrt(acc / n), sd, 0.05 * sd);
}

TEST(Spec, BlendAfterDaOnlyForEnDAB) {
  ScenarioSpec s = ScenarioSpec::vortex(Mode::EnDA);
  EXPECT_NO_THROW(s.validate());
  s.blend.apply_after_da = true;
  EXPECT_THROW(s.validate(), ConfigError);
  ScenarioSpec b = ScenarioSpec::vortex(Mode::EnDAB);
  b.blend.apply_after_da = false;
  EXPECT_THROW(b.validate(), ConfigError);
}

TEST(Spec, AssimilationTimes) {
  const ScenarioSpec v = ScenarioSpec::vortex(Mode::EnDA);
  const auto t = v.assimilation_times();
  ASSERT_EQ(t.size(), 12u);
  EXPECT_DOUBLE_EQ(t.front(), 25.0);
  EXPECT_DOUBLE_EQ(t.back(), 300.0);
  EXPECT_TRUE(ScenarioSpec::vortex(Mode::EnNoDA).assimilation_times().empty());
  EXPECT_EQ(ScenarioSpec::bubble(Mode::EnDA).assimilation_times().size(), 11u);
}

TEST(Scenario, DeterministicForFixedSeed) {
  const ScenarioSpec spec = tiny_vortex(Mode::EnDAB);
  const ScenarioResult a = run_scenario(spec), b = run_scenario(spec);
  ASSERT_EQ(a.times.size(), 3u);
  EXPECT_EQ(a.rmse, b.rmse);
  EXPECT_EQ(a.ensemble, b.ensemble);
  ASSERT_EQ(a.analyses.size(), 2u);
  EXPECT_GT(a.analyses[0].n_obs, 0u);
  EXPECT_GT(a.analyses[0].imbalance_P, 0.0);
}

TEST(Scenario, ModesShareTheForecastBeforeTheFirstAnalysis) {
  const ScenarioResult none = run_scenario(tiny_vortex(Mode::EnNoDA));
  const ScenarioResult da = run_scenario(tiny_vortex(Mode::EnDA));
  for (Variable v : all_variables()) EXPECT_EQ(none.rmse_of(v)[0], da.rmse_of(v)[0]);
  EXPECT_TRUE(none.analyses.empty());
  // The analysis pulls the ensemble towards the observations.
  EXPECT_LT(da.rmse_of(Variable::rho_u)[1], none.rmse_of(Variable::rho_u)[1]);
}
