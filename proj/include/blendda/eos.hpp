#pragma once

#include <cmath>

#include "blendda/constants.hpp"
#include "blendda/errors.hpp"

namespace blendda {

// Dimensional equation of state. pi denotes the full Exner pressure here.

inline double eos_pi_from_p(double p, const PhysConstants& c) {
  if (!(p > 0)) throw DomainError("pressure must be positive");
  return std::pow(p / c.p_ref(), c.R() / c.c_p());
}

inline double eos_p_from_pi(double pi, const PhysConstants& c) {
  if (!(pi > 0)) throw DomainError("Exner pressure must be positive");
  return c.p_ref() * std::pow(pi, c.c_p() / c.R());
}

inline double P_from_pi(double pi, const PhysConstants& c) {
  if (!(pi > 0)) throw DomainError("Exner pressure must be positive");
  return c.P_ref() * std::pow(pi, 1.0 / (c.gamma() - 1.0));
}

inline double pi_from_P(double P, const PhysConstants& c) {
  if (!(P > 0)) throw DomainError("P must be positive");
  return std::pow(P / c.P_ref(), c.gamma() - 1.0);
}

inline double dP_dpi(double pi, const PhysConstants& c) {
  if (!(pi > 0)) throw DomainError("Exner pressure must be positive");
  const double gm1 = c.gamma() - 1.0;
  return c.P_ref() / gm1 * std::pow(pi, (2.0 - c.gamma()) / gm1);
}

inline double p_from_P(double P, const PhysConstants& c) {
  if (!(P > 0)) throw DomainError("P must be positive");
  return c.p_ref() * std::pow(P / c.P_ref(), c.gamma());
}

// Nondimensional forms (P scaled by p_ref/R, p by p_ref).
namespace nd {

inline double pi_from_P(double P, double gamma) { return std::pow(P, gamma - 1.0); }
inline double P_from_pi(double pi, double gamma) { return std::pow(pi, 1.0 / (gamma - 1.0)); }
inline double p_from_P(double P, double gamma) { return std::pow(P, gamma); }
/// dP/dpi expressed through P: P^(2-gamma) / (gamma - 1).
inline double dP_dpi_of_P(double P, double gamma) {
  return std::pow(P, 2.0 - gamma) / (gamma - 1.0);
}

}  // namespace nd

}  // namespace blendda
