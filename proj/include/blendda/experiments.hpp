#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "blendda/blend.hpp"
#include "blendda/cases.hpp"
#include "blendda/diagnostics.hpp"
#include "blendda/letkf.hpp"

namespace blendda {

enum class CaseKind { vortex, bubble };
enum class Mode { EnNoDA, EnDA, EnDAB };

inline const char* to_string(CaseKind c) { return c == CaseKind::vortex ? "vortex" : "bubble"; }
inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::EnNoDA: return "EnNoDA";
    case Mode::EnDA: return "EnDA";
    case Mode::EnDAB: return "EnDAB";
  }
  return "?";
}

inline CaseKind case_from_string(const std::string& s) {
  if (s == "vortex") return CaseKind::vortex;
  if (s == "bubble") return CaseKind::bubble;
  throw ConfigError("case", "unknown case '" + s + "'");
}

inline Mode mode_from_string(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "ennoda") return Mode::EnNoDA;
  if (l == "enda") return Mode::EnDA;
  if (l == "endab") return Mode::EnDAB;
  throw ConfigError("mode", "unknown mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// Single deterministic runs with pressure probes.

enum class RunRegime { compressible, pseudo_incompressible, blended };

struct ProbeSpec {
  std::string name;
  double x_km, z_km;
  ProbeVariable var;
};

inline std::vector<ProbeSpec> vortex_probes() { return {{"center", 0.0, 0.0, ProbeVariable::p}}; }
inline std::vector<ProbeSpec> bubble_probes() {
  return {{"left", -7.5, 5.0, ProbeVariable::p_prime}, {"top", 0.0, 5.0, ProbeVariable::p_prime}};
}

/// Stop after t_final_s seconds or max_steps steps, whichever is set; a
/// non-empty replay_dt fixes the step sequence (nondimensional) instead.
struct RunLimits {
  double t_final_s = 0.0;
  int max_steps = 0;
  std::vector<double> replay_dt;
};

struct RunResult {
  std::vector<ProbeSeries> probes;
  std::vector<double> dts;  ///< nondimensional
  double max_div_residual = 0.0;
  std::vector<BlendEvent> events;
  ModelState final_state;
};

/// Runs one state forward. `blended` applies one pseudo-incompressible step
/// at the start and converts back with `pi_choice`; `pseudo_incompressible`
/// converts once and stays there.
inline RunResult run_single(const Model& m, ModelState s, RunRegime regime, PiChoice pi_choice,
                            const StepPlan& plan, const RunLimits& lim,
                            const std::vector<ProbeSpec>& probe_specs) {
  if (lim.replay_dt.empty() && lim.t_final_s <= 0 && lim.max_steps <= 0)
    throw ConfigError("t_final", "run needs a final time or a step count");
  const double t_ref = m.phys.t_ref();
  const double t_end = lim.t_final_s / t_ref;

  std::vector<Probe> probes;
  for (const auto& p : probe_specs) probes.emplace_back(p.name, p.x_km, p.z_km, p.var, m);
  for (auto& p : probes) p.record(s);

  RunResult out;
  std::size_t n = 0;
  DtSource next = [&](const ModelState& st) -> double {
    if (!lim.replay_dt.empty()) return n < lim.replay_dt.size() ? lim.replay_dt[n] : -1.0;
    if (lim.max_steps > 0 && int(n) >= lim.max_steps) return -1.0;
    if (lim.t_final_s > 0) {
      const double rem = t_end - st.t;
      if (rem <= 1e-9 * t_end) return -1.0;
      return std::min(compute_dt(st, plan, m.grid, n), rem);
    }
    return compute_dt(st, plan, m.grid, n);
  };
  auto on_step = [&](const ModelState& st, const StepLog& log) {
    ++n;
    out.dts.push_back(log.dt);
    out.max_div_residual = std::max(out.max_div_residual, log.div_residual);
    for (auto& p : probes) p.record(st);
  };

  if (regime == RunRegime::pseudo_incompressible) {
    to_psinc(s, m);
    for (;;) {
      const double dt = next(s);
      if (!(dt > 0)) break;
      const StepLog log = step(s, m, dt, plan);
      on_step(s, log);
    }
  } else {
    BlendConfig cfg;
    cfg.enabled = regime == RunRegime::blended;
    cfg.pi_choice = pi_choice;
    out.events = blended_window(s, m, cfg, plan, next, on_step).events;
  }
  for (auto& p : probes) out.probes.push_back(p.series());
  out.final_state = std::move(s);
  return out;
}

/// Relative errors of the unblended and blended vortex runs from the
/// imbalanced initial state against the pseudo-incompressible reference.
struct VortexBlendStudy {
  int steps = 0;
  double E_c = 0, E_b_half = 0, E_b_full = 0;
  // Same runs measured against the balanced compressible run.
  double E_c_bal = 0, E_b_half_bal = 0, E_b_full_bal = 0;
  double E_bal = 0;  ///< balanced compressible run against the reference
};

inline VortexBlendStudy vortex_blend_study(int steps, int nx = 64, int nz = 64) {
  const Model m = vortex_model(nx, nz);
  const StepPlan plan = vortex_plan();
  const auto probes = vortex_probes();
  const ModelState imb = init_vortex_imbalanced(m, 0.0, 0.0);
  RunLimits lim;
  lim.max_steps = steps;
  auto inc = [&](const ModelState& s0, RunRegime r, PiChoice c) {
    return run_single(m, s0, r, c, plan, lim, probes).probes[0].increments();
  };
  const auto ref = inc(imb, RunRegime::pseudo_incompressible, PiChoice::half);
  const auto bal = inc(init_vortex(m, 0.0, 0.0), RunRegime::compressible, PiChoice::half);
  const auto c = inc(imb, RunRegime::compressible, PiChoice::half);
  const auto bh = inc(imb, RunRegime::blended, PiChoice::half);
  const auto bf = inc(imb, RunRegime::blended, PiChoice::full);
  VortexBlendStudy r;
  r.steps = steps;
  r.E_c = relative_error(c, ref);
  r.E_b_half = relative_error(bh, ref);
  r.E_b_full = relative_error(bf, ref);
  r.E_c_bal = relative_error(c, bal);
  r.E_b_half_bal = relative_error(bh, bal);
  r.E_b_full_bal = relative_error(bf, bal);
  r.E_bal = relative_error(bal, ref);
  return r;
}

struct BubbleProbeErrors {
  std::string name;
  double E_c = 0, E_b = 0;
  double ratio() const { return E_c / E_b; }
};

struct BubbleBlendStudy {
  std::vector<BubbleProbeErrors> probes;
  double max_div_residual = 0.0;  ///< over all pseudo-incompressible correctors
  int steps = 0;
};

/// Bubble of 2 K: pseudo-incompressible reference, then compressible and
/// blended runs replaying the reference's step sequence.
inline BubbleBlendStudy bubble_blend_study(bool advective_dt, double t_final_s = 1000.0,
                                           int nx = 160, int nz = 80) {
  const Model m = bubble_model(nx, nz);
  const StepPlan plan = bubble_plan(m, advective_dt);
  const auto specs = bubble_probes();
  const ModelState s0 = init_bubble(m, 2.0);
  RunLimits lim;
  lim.t_final_s = t_final_s;
  const RunResult ref =
      run_single(m, s0, RunRegime::pseudo_incompressible, PiChoice::half, plan, lim, specs);
  RunLimits replay;
  replay.replay_dt = ref.dts;
  const RunResult c = run_single(m, s0, RunRegime::compressible, PiChoice::half, plan, replay, specs);
  const RunResult b = run_single(m, s0, RunRegime::blended, PiChoice::half, plan, replay, specs);
  BubbleBlendStudy out;
  out.steps = int(ref.dts.size());
  out.max_div_residual = std::max(ref.max_div_residual, b.max_div_residual);
  for (std::size_t p = 0; p < specs.size(); ++p) {
    const auto r = ref.probes[p].increments();
    out.probes.push_back({specs[p].name, relative_error(c.probes[p].increments(), r),
                          relative_error(b.probes[p].increments(), r)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ensemble scenarios.

struct ScenarioSpec {
  CaseKind case_kind = CaseKind::vortex;
  Mode mode = Mode::EnDAB;
  int K = 10;
  std::uint64_t seed = 1;
  double t_first = 25.0;  ///< s
  double dt_obs = 25.0;   ///< s
  double t_final = 300.0;  ///< s
  double output_dt = 5.0;  ///< s, RMSE sampling interval
  double obs_fraction = 0.1;
  double noise_frac = 0.05;
  LetkfConfig letkf;
  BlendConfig blend;
  int nx = 64, nz = 64;
  bool advective_dt = true;  ///< bubble only
  PhysConstants phys = vortex_constants();

  static ScenarioSpec vortex(Mode mode) {
    ScenarioSpec s;
    s.mode = mode;
    s.letkf.observed_vars = all_variables();
    s.blend.apply_after_da = mode == Mode::EnDAB;
    return s;
  }

  static ScenarioSpec bubble(Mode mode) {
    ScenarioSpec s;
    s.case_kind = CaseKind::bubble;
    s.mode = mode;
    s.t_first = 500.0;
    s.dt_obs = 50.0;
    s.t_final = 1000.0;
    s.output_dt = 50.0;
    s.nx = 160;
    s.nz = 80;
    s.phys = bubble_constants();
    s.letkf.observed_vars = {Variable::rho_u, Variable::rho_w};
    s.blend.apply_after_da = mode == Mode::EnDAB;
    return s;
  }

  void validate() const {
    if (K < 2) throw ConfigError("K", "ensemble needs at least two members");
    if (!(t_final > 0)) throw ConfigError("t_final", "must be positive");
    if (!(output_dt > 0)) throw ConfigError("output_dt", "must be positive");
    if (!(dt_obs > 0)) throw ConfigError("dt_obs", "must be positive");
    if (!(t_first > 0)) throw ConfigError("t_first", "must be positive");
    if (!(obs_fraction > 0 && obs_fraction <= 1)) throw ConfigError("obs_fraction", "must be in (0, 1]");
    if (!(noise_frac >= 0)) throw ConfigError("noise_frac", "must be non-negative");
    if (mode == Mode::EnDAB && !blend.apply_after_da)
      throw ConfigError("blend.apply_after_da", "EnDAB requires blending after assimilation");
    if (mode != Mode::EnDAB && blend.apply_after_da)
      throw ConfigError("blend.apply_after_da", "only EnDAB blends after assimilation");
    letkf.validate();
    blend.validate();
  }

  /// Assimilation times in seconds; empty for EnNoDA.
  std::vector<double> assimilation_times() const {
    std::vector<double> t;
    if (mode == Mode::EnNoDA) return t;
    for (int n = 0;; ++n) {
      const double tn = t_first + n * dt_obs;
      if (tn > t_final + 1e-9) break;
      t.push_back(tn);
    }
    return t;
  }
};

/// Independent seeded stream per purpose so adding draws to one does not shift another.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), purpose};
  return std::mt19937_64(seq);
}

inline constexpr std::uint32_t stream_init = 1;
inline constexpr std::uint32_t stream_obs = 2;

/// Draw from [a, b): uniform_real_distribution may round up to b.
inline double draw_half_open(std::mt19937_64& rng, double a, double b) {
  std::uniform_real_distribution<double> u(a, b);
  for (;;) {
    const double x = u(rng);
    if (x < b) return x;
  }
}

struct EnsembleSetup {
  std::vector<ModelState> members;
  ModelState truth;  ///< initial state; first-step blending is applied while running
  ModelState obs;    ///< initial state of the observation run
  bool obs_is_truth = false;
  std::vector<std::array<double, 2>> draws;  ///< per member then obs: centre (m) or amplitude (K)
};

inline Model scenario_model(const ScenarioSpec& spec) {
  return spec.case_kind == CaseKind::vortex ? vortex_model(spec.nx, spec.nz, spec.phys)
                                            : bubble_model(spec.nx, spec.nz, spec.phys);
}

inline StepPlan scenario_plan(const ScenarioSpec& spec, const Model& m) {
  return spec.case_kind == CaseKind::vortex ? vortex_plan() : bubble_plan(m, spec.advective_dt);
}

/// K members plus one extra draw for the observation run and the truth.
/// Vortex: centres uniform in [-1, 1) km per coordinate. Bubble: amplitudes
/// uniform in [2, 12) K.
inline EnsembleSetup make_ensemble(const ScenarioSpec& spec, const Model& m) {
  if (spec.K < 2) throw ConfigError("K", "ensemble needs at least two members");
  auto rng = substream(spec.seed, stream_init);
  EnsembleSetup e;
  for (int k = 0; k <= spec.K; ++k) {
    if (spec.case_kind == CaseKind::vortex) {
      const double xc = draw_half_open(rng, -1000.0, 1000.0);
      const double zc = draw_half_open(rng, -1000.0, 1000.0);
      e.draws.push_back({xc, zc});
    } else {
      e.draws.push_back({draw_half_open(rng, 2.0, 12.0), 0.0});
    }
  }
  auto init = [&](const std::array<double, 2>& d) {
    return spec.case_kind == CaseKind::vortex ? init_vortex(m, d[0], d[1]) : init_bubble(m, d[0]);
  };
  for (int k = 0; k < spec.K; ++k) e.members.push_back(init(e.draws[k]));
  e.truth = init(e.draws[spec.K]);
  e.obs = e.truth;
  e.obs_is_truth = spec.case_kind == CaseKind::bubble;
  return e;
}

/// Sparse noisy observations of `obs` at the given time. A fixed-count mask
/// of ceil(fraction * Nx * Nz) points is Fisher-Yates shuffled and applied to
/// every observed variable (pi on the node grid draws its own mask when the
/// node count differs). Noise std is noise_frac times the peak-to-peak
/// amplitude of each observed field.
inline ObservationBatch gen_observations(const ModelState& obs, const Model& m,
                                         const ScenarioSpec& spec, std::mt19937_64& rng,
                                         double time_s) {
  const Grid& g = m.grid;
  auto draw_mask = [&](int n) {
    const int count = int(std::ceil(spec.obs_fraction * n - 1e-9));
    std::vector<char> mask(n, 0);
    std::fill(mask.begin(), mask.begin() + count, 1);
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(mask[i], mask[pick(rng)]);
    }
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask[i]) idx.push_back(i);
    return idx;
  };
  const std::vector<int> cell_idx = draw_mask(g.cells());
  std::vector<int> node_idx;

  ObservationBatch batch;
  batch.time = time_s;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Variable v : spec.letkf.observed_vars) {
    const Field2D& f = field(obs, v);
    const std::vector<int>* idx = &cell_idx;
    if (v == Variable::pi && g.nodes() != g.cells()) {
      if (node_idx.empty()) node_idx = draw_mask(g.nodes());
      idx = &node_idx;
    }
    const double amp = f.max() - f.min();
    const double sd = spec.noise_frac * amp;
    // Exact observations still need a finite error variance in the filter.
    const double sd_filter = std::max(sd, 1e-8 * std::max(f.max_abs(), 1e-300));
    ObservationBatch::Block b{v, *idx, {}, std::vector<double>(idx->size(), sd_filter)};
    for (int i : *idx) b.values.push_back(f[i] + (sd > 0 ? sd * normal(rng) : 0.0));
    batch.blocks.push_back(std::move(b));
  }
  return batch;
}

struct AnalysisRecord {
  double t = 0.0;  ///< s
  std::size_t n_obs = 0;
  double imbalance_P = 0.0;  ///< |P_hat| in SI units of P
};

struct ScenarioResult {
  std::vector<double> times;                       ///< s
  std::array<std::vector<double>, 5> rmse;         ///< indexed by Variable
  std::vector<AnalysisRecord> analyses;
  std::vector<ObservationBatch> observations;
  std::vector<std::string> events;
  std::vector<ProbeSeries> probes;  ///< ensemble-mean pressure
  std::vector<ModelState> ensemble;
  ModelState truth;

  const std::vector<double>& rmse_of(Variable v) const { return rmse[int(v)]; }
};

/// Called at every output time with the ensemble and the truth.
using OutputHook =
    std::function<void(double t_s, const std::vector<ModelState>&, const ModelState& truth)>;

namespace detail {

struct Runner {
  ModelState s;
  std::size_t steps = 0;
  bool blend_pending = false;  ///< blend the next window
};

/// Advances to t_target (nondimensional), splitting the remaining interval
/// into equal steps no longer than the plan's step.
inline void advance_to(Runner& r, double t_target, const Model& m, const StepPlan& plan,
                       const BlendConfig& blend, std::vector<std::string>* log,
                       const std::string& who) {
  DtSource next = [&](const ModelState& st) -> double {
    const double rem = t_target - st.t;
    if (rem <= 1e-9 * std::max(1.0, std::abs(t_target))) return -1.0;
    const double dt = compute_dt(st, plan, m.grid, r.steps);
    const double n = std::ceil(rem / dt - 1e-9);
    return rem / n;
  };
  BlendConfig cfg = blend;
  cfg.enabled = r.blend_pending;
  r.blend_pending = false;
  const WindowResult w =
      blended_window(r.s, m, cfg, plan, next, [&](const ModelState&, const StepLog&) { ++r.steps; });
  if (log)
    for (const auto& e : w.events)
      log->push_back(who + " " + e.direction + " t=" + std::to_string(e.t * m.phys.t_ref()) +
                     " pi=" + to_string(e.pi_choice));
}

inline ModelState ensemble_mean(const std::vector<ModelState>& ens) {
  ModelState m = ens.front();
  for (Variable v : all_variables()) {
    Field2D& f = field(m, v);
    for (std::size_t q = 0; q < f.size(); ++q) {
      double acc = 0.0;
      for (const auto& s : ens) acc += field(s, v)[q];
      f[q] = acc / ens.size();
    }
  }
  return m;
}

}  // namespace detail

/// Runs one ensemble scenario: members, the truth and the observation run
/// advance between output and assimilation times; at each assimilation time
/// EnDA and EnDAB analyse, and EnDAB then spends one step in the pseudo-
/// incompressible regime.
inline ScenarioResult run_scenario(const ScenarioSpec& spec, const OutputHook& hook = {}) {
  spec.validate();
  const Model m = scenario_model(spec);
  const StepPlan plan = scenario_plan(spec, m);
  const double t_ref = m.phys.t_ref();
  EnsembleSetup setup = make_ensemble(spec, m);
  auto obs_rng = substream(spec.seed, stream_obs);

  std::vector<detail::Runner> members;
  for (auto& s : setup.members) members.push_back({std::move(s), 0, spec.blend.apply_at_init});
  detail::Runner truth{std::move(setup.truth), 0, spec.blend.apply_at_init};
  // The vortex observation run is the balanced compressible run of the same draw.
  detail::Runner obs{std::move(setup.obs), 0, false};

  // Event schedule: output times and assimilation times, merged.
  std::vector<double> da = spec.assimilation_times();
  std::vector<double> marks;
  for (int n = 0;; ++n) {
    const double t = n * spec.output_dt;
    if (t > spec.t_final + 1e-9) break;
    marks.push_back(t);
  }
  marks.insert(marks.end(), da.begin(), da.end());
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              marks.end());

  ScenarioResult res;
  std::vector<Probe> probe_tmpl;
  for (const auto& p : spec.case_kind == CaseKind::vortex ? vortex_probes() : bubble_probes()) {
    probe_tmpl.emplace_back(p.name, p.x_km, p.z_km, p.var, m);
    res.probes.push_back(probe_tmpl.back().series());
  }

  auto snapshot = [&]() -> std::vector<ModelState> {
    std::vector<ModelState> e;
    for (const auto& r : members) e.push_back(r.s);
    return e;
  };
  auto record = [&](double t_s) {
    const auto ens = snapshot();
    res.times.push_back(t_s);
    for (Variable v : all_variables()) res.rmse[int(v)].push_back(rmse(ens, truth.s, v, m));
    for (std::size_t p = 0; p < probe_tmpl.size(); ++p) {
      double acc = 0.0;
      for (const auto& s : ens) {
        Probe pr = probe_tmpl[p];
        pr.record(s);
        acc += pr.series().values.back();
      }
      res.probes[p].t.push_back(t_s);
      res.probes[p].values.push_back(acc / ens.size());
    }
    if (hook) hook(t_s, ens, truth.s);
  };

  std::size_t next_da = 0;
  for (double t_s : marks) {
    const double t_nd = t_s / t_ref;
    if (t_s > 0) {
      for (std::size_t k = 0; k < members.size(); ++k)
        detail::advance_to(members[k], t_nd, m, plan, spec.blend, &res.events,
                           "member" + std::to_string(k));
      detail::advance_to(truth, t_nd, m, plan, spec.blend, &res.events, "truth");
      if (!setup.obs_is_truth) detail::advance_to(obs, t_nd, m, plan, spec.blend, nullptr, "obs");
    }
    const bool is_da = next_da < da.size() && std::abs(da[next_da] - t_s) < 1e-9;
    if (is_da) {
      ++next_da;
      const ModelState& src = setup.obs_is_truth ? truth.s : obs.s;
      const ObservationBatch batch = gen_observations(src, m, spec, obs_rng, t_s);
      const auto pre = snapshot();
      const auto post = analyse(pre, batch, spec.letkf, m.grid);
      for (auto& s : post) s.check_positive();
      for (std::size_t k = 0; k < members.size(); ++k) {
        members[k].s = post[k];
        members[k].blend_pending = spec.blend.apply_after_da;
      }
      res.analyses.push_back(
          {t_s, batch.size(), imbalance_estimate(pre, post, m, spec.letkf.region)});
      res.events.push_back("analysis t=" + std::to_string(t_s) +
                           " n_obs=" + std::to_string(batch.size()));
      res.observations.push_back(batch);
    }
    if (std::abs(std::remainder(t_s, spec.output_dt)) < 1e-9) record(t_s);
  }
  res.ensemble = snapshot();
  res.truth = truth.s;
  return res;
}

}  // namespace blendda
