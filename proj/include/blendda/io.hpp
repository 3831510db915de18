#pragma once

#include <bit>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "blendda/experiments.hpp"

namespace blendda {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config files: INI-style key = value lines, with optional [letkf], [blend]
// and [constants] sections. Keys inside a section are addressed as
// "section.key" in error messages.

using ConfigTree = boost::property_tree::ptree;

inline ConfigTree read_config(const std::string& path) {
  ConfigTree t;
  try {
    boost::property_tree::read_ini(path, t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("file", e.what());
  }
  return t;
}

inline ConfigTree parse_config(const std::string& text) {
  ConfigTree t;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("file", e.what());
  }
  return t;
}

namespace detail {

inline void check_keys(const ConfigTree& t, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    if (!v.empty()) {
      for (const auto& [k2, v2] : v) {
        const std::string full = k + "." + k2;
        if (!allowed.count(full)) throw ConfigError(full, "unknown key");
      }
    } else if (!allowed.count(k)) {
      throw ConfigError(k, "unknown key");
    }
  }
}

template <class T>
T get(const ConfigTree& t, const std::string& key, T fallback) {
  const auto v = t.get_optional<std::string>(key);
  if (!v) return fallback;
  if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + *v + "'");
  } else {
    std::istringstream in(*v);
    T x{};
    in >> x;
    if (in.fail() || !(in >> std::ws).eof())
      throw ConfigError(key, "cannot parse value '" + *v + "'");
    return x;
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline Reconstruction reconstruction_from_string(const std::string& key, const std::string& s) {
  if (s == "first-order") return Reconstruction::first_order;
  if (s == "mc") return Reconstruction::mc_limited;
  if (s == "unlimited") return Reconstruction::unlimited;
  throw ConfigError(key, "unknown reconstruction '" + s + "'");
}

inline PiChoice pi_choice_from_string(const std::string& key, const std::string& s) {
  if (s == "half") return PiChoice::half;
  if (s == "full") return PiChoice::full;
  throw ConfigError(key, "expected half or full, got '" + s + "'");
}

inline const std::set<std::string> constant_keys{
    "constants.p_ref", "constants.R",     "constants.gamma", "constants.g",
    "constants.f",     "constants.T_ref", "constants.u_ref", "constants.h_ref"};

inline PhysConstants constants_from(const ConfigTree& t, const PhysConstants& d) {
  return {get(t, "constants.p_ref", d.p_ref()), get(t, "constants.R", d.R()),
          get(t, "constants.gamma", d.gamma()), get(t, "constants.g", d.g()),
          get(t, "constants.f", d.f()),         get(t, "constants.T_ref", d.T_ref()),
          get(t, "constants.u_ref", d.u_ref()), get(t, "constants.h_ref", d.h_ref())};
}

}  // namespace detail

/// Ensemble scenario from a config tree. Defaults follow the case.
inline ScenarioSpec scenario_from_config(const ConfigTree& t) {
  std::set<std::string> allowed{"case",        "mode",       "K",          "seed",
                                "t_first",     "dt_obs",     "t_final",    "output_dt",
                                "obs_fraction", "noise_frac", "nx",        "nz",
                                "advective_dt", "letkf.region", "letkf.loc_fn",
                                "letkf.inflation", "letkf.observed_vars", "blend.pi_choice",
                                "blend.n_psinc_steps", "blend.apply_at_init",
                                "blend.apply_after_da"};
  allowed.insert(detail::constant_keys.begin(), detail::constant_keys.end());
  detail::check_keys(t, allowed);

  const CaseKind ck = case_from_string(detail::get<std::string>(t, "case", "vortex"));
  const Mode mode = mode_from_string(detail::get<std::string>(t, "mode", "EnDAB"));
  ScenarioSpec s = ck == CaseKind::vortex ? ScenarioSpec::vortex(mode) : ScenarioSpec::bubble(mode);
  s.K = detail::get(t, "K", s.K);
  s.seed = detail::get(t, "seed", s.seed);
  s.t_first = detail::get(t, "t_first", s.t_first);
  s.dt_obs = detail::get(t, "dt_obs", s.dt_obs);
  s.t_final = detail::get(t, "t_final", s.t_final);
  s.output_dt = detail::get(t, "output_dt", s.output_dt);
  s.obs_fraction = detail::get(t, "obs_fraction", s.obs_fraction);
  s.noise_frac = detail::get(t, "noise_frac", s.noise_frac);
  s.nx = detail::get(t, "nx", s.nx);
  s.nz = detail::get(t, "nz", s.nz);
  s.advective_dt = detail::get(t, "advective_dt", s.advective_dt);
  s.phys = detail::constants_from(t, s.phys);

  s.letkf.region = detail::get(t, "letkf.region", s.letkf.region);
  s.letkf.loc_fn = localisation_from_string(
      detail::get<std::string>(t, "letkf.loc_fn", "truncated-gaussian"));
  s.letkf.inflation = detail::get(t, "letkf.inflation", s.letkf.inflation);
  if (auto v = t.get_optional<std::string>("letkf.observed_vars")) {
    s.letkf.observed_vars.clear();
    for (const auto& name : detail::split_list(*v)) {
      try {
        s.letkf.observed_vars.push_back(variable_from_string(name));
      } catch (const ConfigError&) {
        throw ConfigError("letkf.observed_vars", "unknown variable '" + name + "'");
      }
    }
  }
  s.blend.pi_choice = detail::pi_choice_from_string(
      "blend.pi_choice", detail::get<std::string>(t, "blend.pi_choice", "half"));
  s.blend.n_psinc_steps = detail::get(t, "blend.n_psinc_steps", s.blend.n_psinc_steps);
  s.blend.apply_at_init = detail::get(t, "blend.apply_at_init", s.blend.apply_at_init);
  s.blend.apply_after_da = detail::get(t, "blend.apply_after_da", s.blend.apply_after_da);
  if (s.nx < 2) throw ConfigError("nx", "need at least 2 cells");
  if (s.nz < 2) throw ConfigError("nz", "need at least 2 cells");
  s.validate();
  return s;
}

/// A single deterministic run.
struct RunSpec {
  CaseKind case_kind = CaseKind::vortex;
  int nx = 64, nz = 64;
  PhysConstants phys = vortex_constants();
  bool imbalanced = false;             ///< vortex: P = p_ref and pi = 0
  double center_x = 0.0, center_z = 0.0;  ///< m
  double amplitude = 2.0;              ///< K, bubble
  RunRegime regime = RunRegime::compressible;
  PiChoice pi_choice = PiChoice::half;
  double t_final = 0.0;  ///< s
  int steps = 0;
  bool advective_dt = false;  ///< bubble
  double cfl = 0.0;           ///< overrides the case value when positive
  double dt = 0.0;            ///< s, fixed step when positive
  std::string reconstruction, half_reconstruction;  ///< empty keeps the case value
  double solver_tol = 0.0;
  std::uint64_t seed = 0;  ///< recorded only; runs are deterministic

  Model model() const {
    return case_kind == CaseKind::vortex ? vortex_model(nx, nz, phys) : bubble_model(nx, nz, phys);
  }

  StepPlan plan(const Model& m) const {
    StepPlan p = case_kind == CaseKind::vortex ? vortex_plan() : bubble_plan(m, advective_dt);
    if (cfl > 0) {
      p.policy = DtPolicy::cfl;
      p.cfl = cfl;
    }
    if (dt > 0) {
      p.policy = DtPolicy::fixed;
      p.dt_fixed = dt / m.phys.t_ref();
      p.dt_overrides.clear();
    }
    if (!reconstruction.empty())
      p.reconstruction = detail::reconstruction_from_string("reconstruction", reconstruction);
    if (!half_reconstruction.empty())
      p.half_reconstruction =
          detail::reconstruction_from_string("half_reconstruction", half_reconstruction);
    if (solver_tol > 0) p.solver.tol = solver_tol;
    return p;
  }

  ModelState initial_state(const Model& m) const {
    if (case_kind == CaseKind::bubble) return init_bubble(m, amplitude);
    return imbalanced ? init_vortex_imbalanced(m, center_x, center_z)
                      : init_vortex(m, center_x, center_z);
  }
};

inline RunSpec run_from_config(const ConfigTree& t) {
  std::set<std::string> allowed{"case",    "nx",        "nz",         "init",   "center_x",
                                "center_z", "amplitude", "regime",     "pi_choice", "t_final",
                                "steps",   "advective_dt", "cfl",      "dt",     "reconstruction",
                                "half_reconstruction", "solver_tol", "seed"};
  allowed.insert(detail::constant_keys.begin(), detail::constant_keys.end());
  detail::check_keys(t, allowed);
  RunSpec r;
  r.case_kind = case_from_string(detail::get<std::string>(t, "case", "vortex"));
  if (r.case_kind == CaseKind::bubble) {
    r.nx = 160;
    r.nz = 80;
    r.phys = bubble_constants();
  }
  r.nx = detail::get(t, "nx", r.nx);
  r.nz = detail::get(t, "nz", r.nz);
  if (r.nx < 2) throw ConfigError("nx", "need at least 2 cells");
  if (r.nz < 2) throw ConfigError("nz", "need at least 2 cells");
  r.phys = detail::constants_from(t, r.phys);
  const std::string init = detail::get<std::string>(t, "init", "balanced");
  if (init != "balanced" && init != "imbalanced")
    throw ConfigError("init", "expected balanced or imbalanced, got '" + init + "'");
  r.imbalanced = init == "imbalanced";
  r.center_x = detail::get(t, "center_x", 0.0);
  r.center_z = detail::get(t, "center_z", 0.0);
  r.amplitude = detail::get(t, "amplitude", r.amplitude);
  if (r.case_kind == CaseKind::bubble && !(r.amplitude >= 0))
    throw ConfigError("amplitude", "must be non-negative");
  const std::string regime = detail::get<std::string>(t, "regime", "compressible");
  if (regime == "compressible") r.regime = RunRegime::compressible;
  else if (regime == "psinc") r.regime = RunRegime::pseudo_incompressible;
  else if (regime == "blended") r.regime = RunRegime::blended;
  else throw ConfigError("regime", "expected compressible, psinc or blended, got '" + regime + "'");
  r.pi_choice =
      detail::pi_choice_from_string("pi_choice", detail::get<std::string>(t, "pi_choice", "half"));
  r.t_final = detail::get(t, "t_final", 0.0);
  r.steps = detail::get(t, "steps", 0);
  if (r.t_final <= 0 && r.steps <= 0)
    throw ConfigError("t_final", "set a positive t_final or steps");
  r.advective_dt = detail::get(t, "advective_dt", false);
  r.cfl = detail::get(t, "cfl", 0.0);
  r.dt = detail::get(t, "dt", 0.0);
  r.reconstruction = detail::get<std::string>(t, "reconstruction", "");
  r.half_reconstruction = detail::get<std::string>(t, "half_reconstruction", "");
  r.solver_tol = detail::get(t, "solver_tol", 0.0);
  r.seed = detail::get<std::uint64_t>(t, "seed", 0);
  // Surface bad names now rather than mid-run.
  const Model m = r.model();
  (void)r.plan(m);
  return r;
}

// ---------------------------------------------------------------------------
// Artifacts.

inline std::string fmt17(double x) {
  std::ostringstream o;
  o << std::setprecision(17) << x;
  return o.str();
}

/// Writes a CSV with a header row; every column has the same length.
inline void write_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw LogicError("write_csv: header/column mismatch");
  for (const auto& c : columns)
    if (c.size() != columns.front().size()) throw LogicError("write_csv: ragged columns");
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << fmt17(columns[c][r]);
    out << '\n';
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return columns[c];
    throw LogicError("csv column '" + name + "' missing");
  }
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) return t;
  t.header = detail::split_list(line);
  t.columns.resize(t.header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_list(line);
    if (cells.size() != t.header.size())
      throw std::runtime_error("malformed row in " + path.string());
    for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(std::stod(cells[c]));
  }
  return t;
}

/// Flat little-endian f64, row-major with z outer and x inner.
inline void write_field(const fs::path& path, const Field2D& f, double scale) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (double v : f.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v * scale);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
}

inline std::vector<double> read_field(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<double> v;
  char buf[8];
  while (in.read(buf, 8)) {
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v.push_back(std::bit_cast<double>(bits));
  }
  return v;
}

inline const char* si_units(Variable v) {
  switch (v) {
    case Variable::rho: return "kg m-3";
    case Variable::rho_u:
    case Variable::rho_w: return "kg m-2 s-1";
    case Variable::P: return "kg K m-3";
    case Variable::pi: return "1";
  }
  return "";
}

/// Writes every field of `s` in SI units (pi as pi') under dir, with
/// `prefix` prepended to the file names, and appends to dir/manifest.txt.
inline void write_snapshot(const fs::path& dir, const ModelState& s, const Model& m,
                           const std::string& prefix = "") {
  fs::create_directories(dir);
  std::ofstream man(dir / "manifest.txt", std::ios::app);
  for (Variable v : all_variables()) {
    const Field2D& f = field(s, v);
    const std::string name = prefix + to_string(v) + ".bin";
    write_field(dir / name, f, si_scale(v, m.phys));
    man << name << " variable=" << to_string(v) << " shape=" << f.nz() << "x" << f.nx()
        << " order=z-outer,x-inner dtype=f64le time_s=" << fmt17(s.t * m.phys.t_ref())
        << " units=" << si_units(v) << " regime=" << to_string(s.regime) << '\n';
  }
}

inline std::string time_dir(double t_s) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(3) << t_s;
  return o.str();
}

/// Run-level manifest: reference set and derived constants.
inline void write_manifest(const fs::path& dir, const Model& m,
                           const std::vector<std::pair<std::string, std::string>>& extra) {
  fs::create_directories(dir);
  std::ofstream o(dir / "manifest.txt");
  const auto& c = m.phys;
  o << std::setprecision(17);
  o << "p_ref = " << c.p_ref() << "\nR = " << c.R() << "\ngamma = " << c.gamma()
    << "\ng = " << c.g() << "\nf = " << c.f() << "\nT_ref = " << c.T_ref()
    << "\nu_ref = " << c.u_ref() << "\nh_ref = " << c.h_ref() << "\nc_ref = " << c.c_ref()
    << "\nMa = " << c.Ma() << "\nt_ref = " << c.t_ref() << "\nnx = " << m.grid.nx()
    << "\nnz = " << m.grid.nz() << '\n';
  for (const auto& [k, v] : extra) o << k << " = " << v << '\n';
}

inline void write_probes(const fs::path& dir, const std::vector<ProbeSeries>& probes) {
  for (const auto& p : probes) {
    std::vector<double> inc(p.values.size(), 0.0);
    for (std::size_t n = 1; n < p.values.size(); ++n) inc[n] = p.values[n] - p.values[n - 1];
    write_csv(dir / ("probe_" + p.name + ".csv"), {"t_s", "value_Pa", "increment_Pa"},
              {p.t, p.values, inc});
  }
}

inline void write_scenario(const fs::path& dir, const ScenarioSpec& spec,
                           const ScenarioResult& r) {
  const Model m = scenario_model(spec);
  std::string vars;
  for (Variable v : spec.letkf.observed_vars) vars += std::string(vars.empty() ? "" : ",") + to_string(v);
  write_manifest(dir, m,
                 {{"case", to_string(spec.case_kind)},
                  {"mode", to_string(spec.mode)},
                  {"K", std::to_string(spec.K)},
                  {"seed", std::to_string(spec.seed)},
                  {"t_first", fmt17(spec.t_first)},
                  {"dt_obs", fmt17(spec.dt_obs)},
                  {"t_final", fmt17(spec.t_final)},
                  {"output_dt", fmt17(spec.output_dt)},
                  {"obs_fraction", fmt17(spec.obs_fraction)},
                  {"noise_frac", fmt17(spec.noise_frac)},
                  {"letkf.region", std::to_string(spec.letkf.region)},
                  {"letkf.inflation", fmt17(spec.letkf.inflation)},
                  {"letkf.observed_vars", vars},
                  {"blend.pi_choice", to_string(spec.blend.pi_choice)},
                  {"blend.apply_after_da", spec.blend.apply_after_da ? "true" : "false"}});
  std::vector<double> flag(r.times.size(), 0.0);
  for (std::size_t i = 0; i < r.times.size(); ++i)
    for (const auto& a : r.analyses)
      if (std::abs(a.t - r.times[i]) < 1e-9) flag[i] = 1.0;
  for (Variable v : all_variables())
    write_csv(dir / ("rmse_" + std::string(to_string(v)) + ".csv"), {"t_s", "rmse", "analysis"},
              {r.times, r.rmse_of(v), flag});
  std::vector<double> at, nobs, imb;
  for (const auto& a : r.analyses) {
    at.push_back(a.t);
    nobs.push_back(double(a.n_obs));
    imb.push_back(a.imbalance_P);
  }
  write_csv(dir / "analyses.csv", {"t_s", "n_obs", "imbalance_P"}, {at, nobs, imb});
  write_probes(dir, r.probes);
  // Observation values and noise are nondimensional, as the filter sees them.
  if (!r.observations.empty()) fs::create_directories(dir / "observations");
  for (const auto& b : r.observations) {
    std::ofstream o(dir / "observations" / (time_dir(b.time) + ".csv"));
    o << "variable,index,value,noise_std\n" << std::setprecision(17);
    for (const auto& blk : b.blocks)
      for (std::size_t e = 0; e < blk.indices.size(); ++e)
        o << to_string(blk.var) << ',' << blk.indices[e] << ',' << blk.values[e] << ','
          << blk.noise_std[e] << '\n';
  }
  std::ofstream ev(dir / "events.log");
  for (const auto& e : r.events) ev << e << '\n';
}

}  // namespace blendda
