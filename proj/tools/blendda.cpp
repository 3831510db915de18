// Command-line front end: single runs, ensemble scenarios, post-processing
// and the localisation sweep.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "blendda/io.hpp"

using namespace blendda;

namespace {

struct Overrides {
  std::string mode, pi_choice;
  int region = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void apply(ScenarioSpec& s, const Overrides& o) {
  if (!o.mode.empty()) {
    s.mode = mode_from_string(o.mode);
    s.blend.apply_after_da = s.mode == Mode::EnDAB;
  }
  if (o.region > 0) s.letkf.region = o.region;
  if (o.seed_set) s.seed = o.seed;
  if (!o.pi_choice.empty()) s.blend.pi_choice = detail::pi_choice_from_string("pi-choice", o.pi_choice);
  s.validate();
}

void print_rmse_summary(const ScenarioSpec& spec, const ScenarioResult& r) {
  std::printf("%s %s region %d: final RMSE", to_string(spec.case_kind), to_string(spec.mode),
              spec.letkf.region);
  for (Variable v : all_variables()) std::printf(" %s=%.6g", to_string(v), r.rmse_of(v).back());
  std::printf("\n");
}

ScenarioResult run_and_write(const ScenarioSpec& spec, const fs::path& out) {
  const Model m = scenario_model(spec);
  const auto da = spec.assimilation_times();
  OutputHook hook = [&](double t, const std::vector<ModelState>& ens, const ModelState& truth) {
    const bool at_da = std::any_of(da.begin(), da.end(), [&](double a) { return std::abs(a - t) < 1e-9; });
    if (!at_da && std::abs(t - spec.t_final) > 1e-9 && t != 0.0) return;
    const fs::path dir = out / "fields" / time_dir(t);
    write_snapshot(dir, detail::ensemble_mean(ens), m);
    write_snapshot(dir, truth, m, "truth_");
  };
  ScenarioResult r = run_scenario(spec, hook);
  write_scenario(out, spec, r);
  return r;
}

int cmd_run(const std::string& config, const fs::path& out, const std::string& pi_choice) {
  RunSpec rs = run_from_config(read_config(config));
  if (!pi_choice.empty()) rs.pi_choice = detail::pi_choice_from_string("pi-choice", pi_choice);
  const Model m = rs.model();
  const StepPlan plan = rs.plan(m);
  RunLimits lim;
  lim.t_final_s = rs.t_final;
  lim.max_steps = rs.steps;
  const auto probes = rs.case_kind == CaseKind::vortex ? vortex_probes() : bubble_probes();
  const RunResult r = run_single(m, rs.initial_state(m), rs.regime, rs.pi_choice, plan, lim, probes);

  const char* regime = rs.regime == RunRegime::compressible ? "compressible"
                       : rs.regime == RunRegime::blended    ? "blended"
                                                            : "psinc";
  write_manifest(out, m,
                 {{"case", to_string(rs.case_kind)},
                  {"regime", regime},
                  {"pi_choice", to_string(rs.pi_choice)},
                  {"steps", std::to_string(r.dts.size())},
                  {"seed", std::to_string(rs.seed)}});
  write_probes(out, r.probes);
  std::vector<double> dt_s;
  for (double d : r.dts) dt_s.push_back(d * m.phys.t_ref());
  write_csv(out / "steps.csv", {"dt_s"}, {dt_s});
  write_snapshot(out / "fields" / time_dir(r.final_state.t * m.phys.t_ref()), r.final_state, m);
  std::ofstream ev(out / "events.log");
  for (const auto& e : r.events)
    ev << e.direction << " t=" << e.t * m.phys.t_ref() << " pi=" << to_string(e.pi_choice) << '\n';
  std::printf("%s run: %zu steps to t = %.6g s, max psinc divergence residual %.3g\n", regime,
              r.dts.size(), r.final_state.t * m.phys.t_ref(), r.max_div_residual);
  return 0;
}

int cmd_ensemble(const std::string& config, const fs::path& out, const Overrides& o) {
  ScenarioSpec spec = scenario_from_config(read_config(config));
  apply(spec, o);
  print_rmse_summary(spec, run_and_write(spec, out));
  return 0;
}

int cmd_diag(const fs::path& run_dir, fs::path out, bool rmse, const std::string& compare) {
  if (out.empty()) out = run_dir;
  bool did = false;
  if (rmse) {
    std::vector<std::string> header{"t_s"};
    std::vector<std::vector<double>> cols;
    for (Variable v : all_variables()) {
      const fs::path p = run_dir / ("rmse_" + std::string(to_string(v)) + ".csv");
      if (!fs::exists(p)) throw ConfigError("run", "missing " + p.string());
      const CsvTable t = read_csv(p);
      if (cols.empty()) cols.push_back(t.column("t_s"));
      header.push_back(to_string(v));
      cols.push_back(t.column("rmse"));
    }
    write_csv(out / "rmse_table.csv", header, cols);
    std::printf("wrote %s (%zu times)\n", (out / "rmse_table.csv").c_str(), cols[0].size());
    did = true;
  }
  if (!compare.empty()) {
    fs::create_directories(out);
    std::ofstream o(out / "relative_errors.csv");
    o << "probe,E\n";
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("probe_", 0) != 0) continue;
      const fs::path ref = fs::path(compare) / name;
      if (!fs::exists(ref)) continue;
      ProbeSeries a, b;
      a.values = read_csv(entry.path()).column("value_Pa");
      b.values = read_csv(ref).column("value_Pa");
      const double E = relative_error(a.increments(), b.increments());
      const std::string probe = name.substr(6, name.size() - 10);
      o << probe << ',' << fmt17(E) << '\n';
      std::printf("%s E = %.6g\n", probe.c_str(), E);
    }
    did = true;
  }
  if (!did) throw ConfigError("diag", "nothing to do: pass --rmse and/or --compare");
  return 0;
}

int cmd_sweep(const std::string& config, const fs::path& out, const std::string& regions,
              Overrides o) {
  ScenarioSpec base = scenario_from_config(read_config(config));
  if (o.seed_set) base.seed = o.seed;
  std::vector<int> sizes;
  for (const auto& s : detail::split_list(regions)) {
    try {
      sizes.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw ConfigError("regions", "not an integer: '" + s + "'");
    }
  }
  if (sizes.empty()) throw ConfigError("regions", "empty list");
  fs::create_directories(out);
  std::ofstream summary(out / "sweep.csv");
  summary << "region,mode,max_rmse_rho_u,mean_rmse_rho_u,final_rmse_rho_u\n";
  auto stats = [&](const ScenarioSpec& s, const ScenarioResult& r, const std::string& region) {
    const auto& v = r.rmse_of(Variable::rho_u);
    double mx = 0, mean = 0;
    int n = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (r.times[i] > s.t_first + 1e-9) {
        mx = std::max(mx, v[i]);
        mean += v[i];
        ++n;
      }
    summary << region << ',' << to_string(s.mode) << ',' << fmt17(mx) << ','
            << fmt17(n ? mean / n : 0.0) << ',' << fmt17(v.back()) << '\n';
  };
  ScenarioSpec ctl = base;
  ctl.mode = Mode::EnNoDA;
  ctl.blend.apply_after_da = false;
  const auto r0 = run_and_write(ctl, out / "EnNoDA");
  print_rmse_summary(ctl, r0);
  stats(ctl, r0, "none");
  for (int n : sizes) {
    for (Mode mode : {Mode::EnDA, Mode::EnDAB}) {
      ScenarioSpec s = base;
      s.mode = mode;
      s.blend.apply_after_da = mode == Mode::EnDAB;
      s.letkf.region = n;
      s.validate();
      const auto r = run_and_write(s, out / ("region_" + std::to_string(n)) / to_string(mode));
      print_rmse_summary(s, r);
      stats(s, r, std::to_string(n));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blended soundproof/compressible model with ensemble data assimilation"};
  app.require_subcommand(1);

  std::string config, out, pi_choice, regions = "5,21,41", compare, run_dir;
  Overrides o;
  bool rmse = false;

  auto* run = app.add_subcommand("run", "single deterministic simulation");
  run->add_option("--config", config, "config file")->required();
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--pi-choice", pi_choice, "pi after blending")->check(CLI::IsMember({"half", "full"}));
  run->add_option("--seed", o.seed, "recorded in the manifest");

  auto* ens = app.add_subcommand("ensemble", "ensemble scenario (EnNoDA, EnDA, EnDAB)");
  ens->add_option("--config", config, "config file")->required();
  ens->add_option("--out", out, "output directory")->required();
  ens->add_option("--mode", o.mode, "ennoda, enda or endab")
      ->check(CLI::IsMember({"ennoda", "enda", "endab"}, CLI::ignore_case));
  ens->add_option("--region", o.region, "localisation region size N (odd)");
  ens->add_option("--pi-choice", o.pi_choice, "pi after blending")
      ->check(CLI::IsMember({"half", "full"}));
  auto* seed_opt = ens->add_option("--seed", o.seed, "RNG seed");

  auto* diag = app.add_subcommand("diag", "metric tables from stored artifacts");
  diag->add_option("run_dir", run_dir, "run directory")->required();
  diag->add_option("--out", out, "output directory (default: the run directory)");
  diag->add_flag("--rmse", rmse, "merge rmse_<var>.csv into rmse_table.csv");
  diag->add_option("--compare", compare, "reference run directory for probe relative errors");

  auto* sweep = app.add_subcommand("sweep", "localisation region sweep, EnDA and EnDAB");
  sweep->add_option("--config", config, "config file")->required();
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_option("--regions", regions, "comma-separated region sizes");
  auto* sweep_seed = sweep->add_option("--seed", o.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  o.seed_set = seed_opt->count() > 0 || sweep_seed->count() > 0;

  try {
    if (*run) return cmd_run(config, out, pi_choice);
    if (*ens) return cmd_ensemble(config, out, o);
    if (*diag) return cmd_diag(run_dir, out, rmse, compare);
    if (*sweep) return cmd_sweep(config, out, regions, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const CflError& e) {
    std::cerr << "numerical failure: " << e.what() << " (" << e.cfl() << ")\n";
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const ConversionError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
