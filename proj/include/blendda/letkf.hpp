#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "blendda/diagnostics.hpp"

namespace blendda {

/// Sparse observations of one or more variables at grid points. Cell
/// variables are indexed by cell (j * Nx + i); pi by node (b * node_nx + a).
struct ObservationBatch {
  struct Block {
    Variable var;
    std::vector<int> indices;
    std::vector<double> values;     ///< nondimensional, as stored in the state
    std::vector<double> noise_std;  ///< per entry, same units as values
  };
  double time = 0.0;  ///< seconds
  std::vector<Block> blocks;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.indices.size();
    return n;
  }

  void validate(const Grid& g) const {
    for (const auto& b : blocks) {
      if (b.values.size() != b.indices.size() || b.noise_std.size() != b.indices.size())
        throw LogicError("observation block sizes differ");
      const int limit = b.var == Variable::pi ? g.node_nx() * g.node_nz() : g.nx() * g.nz();
      std::set<int> seen;
      for (std::size_t k = 0; k < b.indices.size(); ++k) {
        if (b.indices[k] < 0 || b.indices[k] >= limit)
          throw DomainError("observation index out of range");
        if (!seen.insert(b.indices[k]).second) throw LogicError("duplicate observation index");
        if (!std::isfinite(b.values[k])) throw DomainError("observation value not finite");
        if (!(b.noise_std[k] > 0)) throw DomainError("observation noise must be positive");
      }
    }
  }
};

enum class Localisation { truncated_gaussian, gaspari_cohn, none };

inline Localisation localisation_from_string(const std::string& s) {
  if (s == "truncated-gaussian") return Localisation::truncated_gaussian;
  if (s == "gaspari-cohn") return Localisation::gaspari_cohn;
  if (s == "none") return Localisation::none;
  throw ConfigError("loc_fn", "unknown localisation function '" + s + "'");
}

struct LetkfConfig {
  int region = 11;  ///< N of the N x N local patch, odd
  Localisation loc_fn = Localisation::truncated_gaussian;
  double inflation = 1.0;
  std::vector<Variable> observed_vars{Variable::rho_u, Variable::rho_w};

  int half() const { return region / 2; }

  void validate() const {
    if (region < 1 || region % 2 == 0) throw ConfigError("region", "must be a positive odd number");
    if (!(inflation >= 1.0)) throw ConfigError("inflation", "must be at least 1");
    if (observed_vars.empty()) throw ConfigError("observed_vars", "must not be empty");
  }
};

/// Weight for an observation `d` cells away from the analysis point.
inline double localisation_weight(double d, int region, Localisation fn) {
  const double half = region / 2;
  if (d < 0) throw DomainError("negative localisation distance");
  switch (fn) {
    case Localisation::none: return 1.0;
    case Localisation::truncated_gaussian: {
      if (d > half) return 0.0;
      if (half == 0) return 1.0;
      const double sigma = 0.5 * half;
      return std::exp(-d * d / (2.0 * sigma * sigma));
    }
    case Localisation::gaspari_cohn: {
      // Fifth-order piecewise rational function with support 2c = half.
      if (half == 0) return d == 0 ? 1.0 : 0.0;
      const double r = d / (0.5 * half);
      if (r >= 2.0) return 0.0;
      if (r <= 1.0)
        return -0.25 * std::pow(r, 5) + 0.5 * std::pow(r, 4) + 0.625 * std::pow(r, 3) -
               5.0 / 3.0 * r * r + 1.0;
      return std::pow(r, 5) / 12.0 - 0.5 * std::pow(r, 4) + 0.625 * std::pow(r, 3) +
             5.0 / 3.0 * r * r - 5.0 * r + 4.0 - 2.0 / (3.0 * r);
    }
  }
  return 0.0;
}

/// Selects the observed entries of one state, block by block.
inline Eigen::VectorXd forward_operator(const ModelState& s, const ObservationBatch& batch,
                                        const Grid& g) {
  batch.validate(g);
  Eigen::VectorXd y(batch.size());
  std::size_t k = 0;
  for (const auto& b : batch.blocks) {
    const Field2D& f = field(s, b.var);
    for (int idx : b.indices) y[k++] = f[idx];
  }
  return y;
}

namespace detail {

/// Position of a cell or node in cell units (cell centre i sits at i).
struct ObsSite {
  double x, z;
};

inline ObsSite site(Variable v, int idx, const Grid& g) {
  if (v == Variable::pi) {
    const int a = idx % g.node_nx(), b = idx / g.node_nx();
    return {a - 0.5, b - 0.5};
  }
  return {double(idx % g.nx()), double(idx / g.nx())};
}

inline double axis_offset(double d, int n, bool periodic) {
  if (periodic) d -= n * std::round(d / n);
  return d;
}

/// Per-point ensemble transform: returns the K x K matrix whose column k
/// holds w^a_k = W^a_k + wbar^a, or an empty matrix when no observation is local.
inline Eigen::MatrixXd local_transform(const Eigen::MatrixXd& Yf, const Eigen::VectorXd& innov,
                                       const Eigen::VectorXd& rinv_loc, double inflation) {
  const int K = int(Yf.cols());
  // C = Y^T R^{-1}, localised column by column.
  const Eigen::MatrixXd C = Yf.transpose() * rinv_loc.asDiagonal();
  Eigen::MatrixXd A = C * Yf;
  A = 0.5 * (A + A.transpose());
  A.diagonal().array() += (K - 1) / inflation;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::VectorXd lam = es.eigenvalues();
  const double floor = 1e-12 * std::max(1.0, lam.maxCoeff());
  lam = lam.cwiseMax(floor);
  const Eigen::MatrixXd& V = es.eigenvectors();
  const Eigen::MatrixXd Pa = V * lam.cwiseInverse().asDiagonal() * V.transpose();
  const Eigen::MatrixXd Wa =
      V * (double(K - 1) * lam.cwiseInverse()).cwiseSqrt().asDiagonal() * V.transpose();
  const Eigen::VectorXd wbar = Pa * (C * innov);
  return Wa.colwise() + wbar;
}

}  // namespace detail

/// Local ensemble transform Kalman filter analysis. Every cell (rho, rho u,
/// rho w, P) and every node (pi) is analysed from the observations in the
/// N x N patch around it; the patch wraps on periodic axes and is clipped at walls.
inline std::vector<ModelState> analyse(const std::vector<ModelState>& ens,
                                       const ObservationBatch& batch, const LetkfConfig& cfg,
                                       const Grid& g) {
  cfg.validate();
  const int K = int(ens.size());
  if (K < 2) throw ConfigError("K", "ensemble needs at least two members");
  if (batch.size() == 0) throw LogicError("analyse: empty observation batch");
  batch.validate(g);

  const int L = int(batch.size());
  Eigen::MatrixXd Y(L, K);
  for (int k = 0; k < K; ++k) Y.col(k) = forward_operator(ens[k], batch, g);
  const Eigen::VectorXd ybar = Y.rowwise().mean();
  const Eigen::MatrixXd Yf = Y.colwise() - ybar;

  Eigen::VectorXd yobs(L), rinv(L);
  std::vector<detail::ObsSite> sites;
  sites.reserve(L);
  {
    int q = 0;
    for (const auto& b : batch.blocks)
      for (std::size_t e = 0; e < b.indices.size(); ++e, ++q) {
        yobs[q] = b.values[e];
        rinv[q] = 1.0 / (b.noise_std[e] * b.noise_std[e]);
        sites.push_back(detail::site(b.var, b.indices[e], g));
      }
  }
  const Eigen::VectorXd innov_all = yobs - ybar;
  const int half = cfg.half();

  std::vector<ModelState> out = ens;
  std::vector<int> local;
  std::vector<double> wloc;

  auto transform_at = [&](double px, double pz) -> Eigen::MatrixXd {
    local.clear();
    wloc.clear();
    for (int q = 0; q < L; ++q) {
      const double dx = detail::axis_offset(sites[q].x - px, g.nx(), g.periodic_x());
      const double dz = detail::axis_offset(sites[q].z - pz, g.nz(), g.periodic_z());
      if (std::abs(dx) > half + 1e-9 || std::abs(dz) > half + 1e-9) continue;
      const double w = localisation_weight(std::hypot(dx, dz), cfg.region, cfg.loc_fn);
      if (w <= 0.0) continue;
      local.push_back(q);
      wloc.push_back(w);
    }
    if (local.empty()) return {};
    const int l = int(local.size());
    Eigen::MatrixXd Yl(l, K);
    Eigen::VectorXd innov(l), r(l);
    for (int a = 0; a < l; ++a) {
      Yl.row(a) = Yf.row(local[a]);
      innov[a] = innov_all[local[a]];
      r[a] = rinv[local[a]] * wloc[a];
    }
    return detail::local_transform(Yl, innov, r, cfg.inflation);
  };

  auto update = [&](const Eigen::MatrixXd& T, auto&& get) {
    Eigen::VectorXd x(K);
    for (int k = 0; k < K; ++k) x[k] = get(ens[k]);
    const double xbar = x.mean();
    const Eigen::RowVectorXd xa = (x.array() - xbar).matrix().transpose() * T;
    for (int k = 0; k < K; ++k) get(out[k]) = xbar + xa[k];
  };

  const Variable cell_vars[] = {Variable::rho, Variable::rho_u, Variable::rho_w, Variable::P};
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const Eigen::MatrixXd T = transform_at(i, j);
      if (T.size() == 0) continue;
      const int idx = j * g.nx() + i;
      for (Variable v : cell_vars)
        update(T, [&](auto& s) -> decltype(auto) { return field(s, v)[idx]; });
    }
  for (int b = 0; b < g.node_nz(); ++b)
    for (int a = 0; a < g.node_nx(); ++a) {
      const Eigen::MatrixXd T = transform_at(a - 0.5, b - 0.5);
      if (T.size() == 0) continue;
      const int idx = b * g.node_nx() + a;
      update(T, [&](auto& s) -> decltype(auto) { return field(s, Variable::pi)[idx]; });
    }
  return out;
}

}  // namespace blendda
