#pragma once

#include <stdexcept>
#include <string>

namespace blendda {

/// Argument outside the domain of a thermodynamic relation (e.g. p <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration. `key()` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Advective Courant number exceeded the stability bound.
class CflError : public std::runtime_error {
 public:
  CflError(double cfl, const std::string& what) : std::runtime_error(what), cfl_(cfl) {}
  double cfl() const noexcept { return cfl_; }

 private:
  double cfl_;
};

/// Krylov iteration did not reach the requested tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(double residual, int iterations, const std::string& what)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Regime conversion produced a non-positive radicand.
class ConversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal inconsistency (wrong stage/regime combination and similar).
class LogicError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace blendda
