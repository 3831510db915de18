#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "blendda/elliptic.hpp"
#include "blendda/state.hpp"

namespace blendda {

enum class ProbeVariable { p, p_prime };

/// Point measurements of pressure (Pa) at one cell, one value per recorded state.
struct ProbeSeries {
  std::string name;
  double x_km = 0.0, z_km = 0.0;
  ProbeVariable variable = ProbeVariable::p;
  std::vector<double> t;       ///< seconds
  std::vector<double> values;  ///< Pa

  /// delta^n = value^{n+1} - value^n.
  std::vector<double> increments(bool skip_spinup = true) const {
    std::vector<double> d;
    for (std::size_t n = skip_spinup ? 1 : 0; n + 1 < values.size(); ++n)
      d.push_back(values[n + 1] - values[n]);
    return d;
  }
};

/// Records p or p' = p - pbar(z) at the cell containing (x_km, z_km).
class Probe {
 public:
  Probe(std::string name, double x_km, double z_km, ProbeVariable var, const Model& m)
      : m_(&m) {
    series_.name = std::move(name);
    series_.x_km = x_km;
    series_.z_km = z_km;
    series_.variable = var;
    const double h_km = m.phys.h_ref() / 1000.0;
    std::tie(i_, j_) = m.grid.locate(x_km / h_km, z_km / h_km);
  }

  void record(const ModelState& s) {
    const Model& m = *m_;
    double p = cell_pressure(s, m, i_, j_);
    if (series_.variable == ProbeVariable::p_prime) p -= std::pow(m.bg.P_cell[j_], m.nd.gamma);
    series_.t.push_back(s.t * m.phys.t_ref());
    series_.values.push_back(p * m.phys.p_ref());
  }

  const ProbeSeries& series() const { return series_; }
  int i() const { return i_; }
  int j() const { return j_; }

 private:
  const Model* m_;
  ProbeSeries series_;
  int i_ = 0, j_ = 0;
};

/// ||a - ref||_2 / ||ref||_2 over two equally long increment series.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& ref) {
  if (a.size() != ref.size()) throw LogicError("relative_error: series lengths differ");
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    num += (a[n] - ref[n]) * (a[n] - ref[n]);
    den += ref[n] * ref[n];
  }
  if (den == 0.0) throw DomainError("relative_error: reference series has zero norm");
  return std::sqrt(num / den);
}

enum class Variable { rho, rho_u, rho_w, P, pi };

inline const std::vector<Variable>& all_variables() {
  static const std::vector<Variable> v{Variable::rho, Variable::rho_u, Variable::rho_w,
                                       Variable::P, Variable::pi};
  return v;
}

inline const char* to_string(Variable v) {
  switch (v) {
    case Variable::rho: return "rho";
    case Variable::rho_u: return "rho_u";
    case Variable::rho_w: return "rho_w";
    case Variable::P: return "P";
    case Variable::pi: return "pi";
  }
  return "?";
}

inline Variable variable_from_string(const std::string& s) {
  for (Variable v : all_variables())
    if (s == to_string(v)) return v;
  throw ConfigError("variable", "unknown variable '" + s + "'");
}

inline const Field2D& field(const ModelState& s, Variable v) {
  switch (v) {
    case Variable::rho: return s.rho;
    case Variable::rho_u: return s.rho_u;
    case Variable::rho_w: return s.rho_w;
    case Variable::P: return s.P;
    case Variable::pi: return s.pi;
  }
  throw LogicError("unknown variable");
}

inline Field2D& field(ModelState& s, Variable v) {
  return const_cast<Field2D&>(field(static_cast<const ModelState&>(s), v));
}

/// SI scale of a stored field: rho, rho u, P in kg/m^3-based units, pi as pi'.
inline double si_scale(Variable v, const PhysConstants& c) {
  switch (v) {
    case Variable::rho: return c.rho_ref();
    case Variable::rho_u:
    case Variable::rho_w: return c.rho_ref() * c.u_ref();
    case Variable::P: return c.P_ref();
    case Variable::pi: return c.Ma() * c.Ma();
  }
  return 1.0;
}

/// Ensemble- and space-averaged RMSE against the truth, in SI units.
/// pi is taken over the cell-averaged node values so every variable uses Nx*Nz points.
inline double rmse(const std::vector<ModelState>& ens, const ModelState& truth, Variable v,
                   const Model& m) {
  if (ens.empty()) throw LogicError("rmse: empty ensemble");
  const Grid& g = m.grid;
  double acc = 0.0;
  for (const ModelState& s : ens) {
    for (int j = 0; j < g.nz(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const double d = v == Variable::pi ? node_avg(s.pi, g, i, j) - node_avg(truth.pi, g, i, j)
                                           : field(s, v)(i, j) - field(truth, v)(i, j);
        acc += d * d;
      }
  }
  const double n = double(ens.size()) * g.nx() * g.nz();
  return std::sqrt(acc / n) * si_scale(v, m.phys);
}

inline double acoustic_time(int region, double dx_m, double c_ref) {
  return 0.5 * region * dx_m / c_ref;
}

/// Scale estimate of the pressure imbalance created by an analysis update:
/// t_ac = (region/2) dx / c_ref, p_hat = (2 t_ac / pi) div(dv) rho c_ref^2,
/// mapped to P through the linearised equation of state dP = P dp / (gamma p).
/// Returns the ensemble mean of the spatial RMS of P_hat, in SI units of P.
inline double imbalance_estimate(const std::vector<ModelState>& pre,
                                 const std::vector<ModelState>& post, const Model& m,
                                 int region) {
  if (pre.size() != post.size() || pre.empty())
    throw LogicError("imbalance_estimate: ensembles differ in size");
  const Grid& g = m.grid;
  const PhysConstants& c = m.phys;
  const double dx_m = g.dx() * c.h_ref();
  const double t_ac = acoustic_time(region, dx_m, c.c_ref());
  const double gamma = c.gamma();
  double total = 0.0;
  for (std::size_t k = 0; k < pre.size(); ++k) {
    Field2D du = make_cell_field(g), dw = make_cell_field(g);
    for (std::size_t q = 0; q < du.size(); ++q) {
      du[q] = (post[k].rho_u[q] / post[k].rho[q] - pre[k].rho_u[q] / pre[k].rho[q]) * c.u_ref();
      dw[q] = (post[k].rho_w[q] / post[k].rho[q] - pre[k].rho_w[q] / pre[k].rho[q]) * c.u_ref();
    }
    // Node divergence in SI (1/s), averaged back to cells.
    const Field2D div = node_divergence(du, dw, g);
    const Field2D w = node_weights(g);
    double acc = 0.0;
    for (int j = 0; j < g.nz(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const double d = (node_avg(div, g, i, j) / node_avg(w, g, i, j)) / c.h_ref();
        const double rho = post[k].rho(i, j) * c.rho_ref();
        const double P = post[k].P(i, j);
        const double p = std::pow(P, gamma) * c.p_ref();
        const double p_hat = (2.0 * t_ac / std::numbers::pi) * d * rho * c.c_ref() * c.c_ref();
        const double P_hat = P * c.P_ref() * p_hat / (gamma * p);
        acc += P_hat * P_hat;
      }
    total += std::sqrt(acc / (g.nx() * g.nz()));
  }
  return total / pre.size();
}

}  // namespace blendda
