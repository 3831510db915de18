#pragma once

#include <cmath>

#include "blendda/errors.hpp"

namespace blendda {

/// Dimensional physical constants and the reference set used for scaling.
///
/// Only p_ref, R, gamma, g, f, T_ref, u_ref and h_ref are stored; c_p, c_v,
/// c_ref and Ma are always derived so they cannot drift out of sync.
/// The reference sound speed is the isothermal one, c_ref = sqrt(R T_ref),
/// which makes the nondimensional equation of state read p = P^gamma.
class PhysConstants {
 public:
  PhysConstants(double p_ref, double R, double gamma, double g, double f, double T_ref,
                double u_ref, double h_ref)
      : p_ref_(p_ref), R_(R), gamma_(gamma), g_(g), f_(f), T_ref_(T_ref), u_ref_(u_ref),
        h_ref_(h_ref) {
    if (!(p_ref > 0)) throw ConfigError("p_ref", "must be positive");
    if (!(R > 0)) throw ConfigError("R", "must be positive");
    if (!(gamma > 1)) throw ConfigError("gamma", "must exceed 1");
    if (!(g >= 0)) throw ConfigError("g", "must be non-negative");
    if (!(T_ref > 0)) throw ConfigError("T_ref", "must be positive");
    if (!(u_ref > 0)) throw ConfigError("u_ref", "must be positive");
    if (!(h_ref > 0)) throw ConfigError("h_ref", "must be positive");
  }

  /// Dry air with R = 287.4, gamma = 1.4, p_ref = 1e5 Pa, T_ref = 300 K, h_ref = 10 km.
  static PhysConstants dry_air(double g, double u_ref) {
    return {1.0e5, 287.4, 1.4, g, 0.0, 300.0, u_ref, 1.0e4};
  }

  double p_ref() const { return p_ref_; }
  double R() const { return R_; }
  double gamma() const { return gamma_; }
  double c_p() const { return R_ * gamma_ / (gamma_ - 1.0); }
  double c_v() const { return R_ / (gamma_ - 1.0); }
  double g() const { return g_; }
  double f() const { return f_; }
  double T_ref() const { return T_ref_; }
  double u_ref() const { return u_ref_; }
  double h_ref() const { return h_ref_; }
  double t_ref() const { return h_ref_ / u_ref_; }
  double rho_ref() const { return p_ref_ / (R_ * T_ref_); }
  /// Reference scale of the mass-weighted potential temperature, p_ref / R.
  double P_ref() const { return p_ref_ / R_; }
  double c_ref() const { return std::sqrt(R_ * T_ref_); }
  double Ma() const { return u_ref_ / c_ref(); }

 private:
  double p_ref_, R_, gamma_, g_, f_, T_ref_, u_ref_, h_ref_;
};

/// Dimensionless parameters that enter the solver.
struct Nondim {
  double gamma;
  double Ma2;  ///< Ma^2
  double cp;   ///< gamma / (gamma - 1), the pressure-gradient prefactor
  double g;    ///< g h_ref / u_ref^2
  double f;    ///< f t_ref

  static Nondim from(const PhysConstants& c) {
    const double Ma = c.Ma();
    return {c.gamma(), Ma * Ma, c.gamma() / (c.gamma() - 1.0),
            c.g() * c.h_ref() / (c.u_ref() * c.u_ref()), c.f() * c.t_ref()};
  }
};

}  // namespace blendda
