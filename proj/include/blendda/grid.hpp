#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "blendda/errors.hpp"

namespace blendda {

enum class Boundary { periodic, wall };

/// Uniform 2D vertical-slice grid in nondimensional coordinates.
///
/// Cells are indexed (i, j) with i along x and j along z. Nodes sit at cell
/// corners. Along a periodic axis node column nx aliases column 0, so only
/// nx distinct node columns are stored; along a walled axis all nx + 1 exist.
class Grid {
 public:
  Grid(int nx, int nz, double x_min, double x_max, double z_min, double z_max, Boundary bc_x,
       Boundary bc_z)
      : nx_(nx), nz_(nz), x_min_(x_min), x_max_(x_max), z_min_(z_min), z_max_(z_max),
        bc_x_(bc_x), bc_z_(bc_z) {
    if (nx < 2) throw ConfigError("Nx", "need at least 2 cells");
    if (nz < 2) throw ConfigError("Nz", "need at least 2 cells");
    if (!(x_max > x_min)) throw ConfigError("x_max", "must exceed x_min");
    if (!(z_max > z_min)) throw ConfigError("z_max", "must exceed z_min");
  }

  int nx() const { return nx_; }
  int nz() const { return nz_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }
  double dx() const { return (x_max_ - x_min_) / nx_; }
  double dz() const { return (z_max_ - z_min_) / nz_; }
  Boundary bc_x() const { return bc_x_; }
  Boundary bc_z() const { return bc_z_; }
  bool periodic_x() const { return bc_x_ == Boundary::periodic; }
  bool periodic_z() const { return bc_z_ == Boundary::periodic; }

  int cells() const { return nx_ * nz_; }
  int node_nx() const { return periodic_x() ? nx_ : nx_ + 1; }
  int node_nz() const { return periodic_z() ? nz_ : nz_ + 1; }
  int nodes() const { return node_nx() * node_nz(); }

  double cell_x(int i) const { return x_min_ + (i + 0.5) * dx(); }
  double cell_z(int j) const { return z_min_ + (j + 0.5) * dz(); }
  double node_x(int i) const { return x_min_ + i * dx(); }
  double node_z(int j) const { return z_min_ + j * dz(); }

  /// Cell column index after periodic wrapping, or -1 if outside a wall.
  int cell_ix(int i) const { return wrap(i, nx_, periodic_x()); }
  int cell_jz(int j) const { return wrap(j, nz_, periodic_z()); }
  /// Stored node column for corner index i in [0, nx] (wraps nx -> 0 when periodic).
  int node_ix(int i) const { return periodic_x() ? ((i % nx_) + nx_) % nx_ : i; }
  int node_jz(int j) const { return periodic_z() ? ((j % nz_) + nz_) % nz_ : j; }

  /// Fraction of the four corner-adjacent cells that exist: 1 in the
  /// interior, 1/2 on a wall, 1/4 in a walled corner.
  double node_weight(int a, int b) const {
    int count = 0;
    for (int dj = -1; dj <= 0; ++dj)
      for (int di = -1; di <= 0; ++di)
        if (cell_ix(a + di) >= 0 && cell_jz(b + dj) >= 0) ++count;
    return count / 4.0;
  }

  /// Nearest cell to a point; throws if the point lies outside the domain.
  std::pair<int, int> locate(double x, double z) const {
    if (x < x_min_ || x > x_max_ || z < z_min_ || z > z_max_)
      throw DomainError("probe location outside the domain");
    const int i = std::clamp(static_cast<int>(std::floor((x - x_min_) / dx())), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor((z - z_min_) / dz())), 0, nz_ - 1);
    return {i, j};
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static int wrap(int i, int n, bool periodic) {
    if (periodic) return ((i % n) + n) % n;
    return (i < 0 || i >= n) ? -1 : i;
  }

  int nx_, nz_;
  double x_min_, x_max_, z_min_, z_max_;
  Boundary bc_x_, bc_z_;
};

/// Dense 2D array stored row-major with z outer, x inner.
class Field2D {
 public:
  Field2D() = default;
  Field2D(int nx, int nz, double value = 0.0)
      : nx_(nx), nz_(nz), data_(static_cast<std::size_t>(nx) * nz, value) {}

  int nx() const { return nx_; }
  int nz() const { return nz_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(j) * nx_ + i]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(j) * nx_ + i]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  double max() const { return *std::max_element(data_.begin(), data_.end()); }
  double min() const { return *std::min_element(data_.begin(), data_.end()); }
  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }
  double sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
  }

  friend bool operator==(const Field2D&, const Field2D&) = default;

 private:
  int nx_ = 0;
  int nz_ = 0;
  std::vector<double> data_;
};

inline Field2D make_cell_field(const Grid& g, double v = 0.0) { return {g.nx(), g.nz(), v}; }
inline Field2D make_node_field(const Grid& g, double v = 0.0) {
  return {g.node_nx(), g.node_nz(), v};
}

}  // namespace blendda
