#pragma once

// Circuit description of a driven SQUID ring (a superconducting loop of
// inductance L closed by a Josephson weak link of capacitance C and critical
// current I_c, shunted by R) and the dimensionless groups that govern both the
// RSJ equation of motion and the quantum Hamiltonian.

#include <cmath>
#include <numbers>
#include <string>

#include "squidqct/errors.hpp"

namespace squidqct {

/// Exact SI values (CODATA 2018 definitions).
struct PhysicalConstants {
  double e = 1.602176634e-19;   // C
  double h = 6.62607015e-34;    // J s
  double hbar = 6.62607015e-34 / (2.0 * std::numbers::pi);
  double phi0 = 6.62607015e-34 / (2.0 * 1.602176634e-19);  // Wb

  static PhysicalConstants codata2018() { return {}; }
};

/// Physical circuit in SI units.
struct CircuitParams {
  double C = 0.0;        // capacitance (F)
  double L = 0.0;        // inductance (H)
  double R = 0.0;        // shunt resistance (Ohm)
  double I_c = 0.0;      // critical current (A)
  double I_d = 0.0;      // drive amplitude (A)
  double omega_d = 0.0;  // drive angular frequency (rad/s)
  double Phi_x = 0.0;    // static flux bias (Wb)
};

/// Dimensionless groups derived from a CircuitParams. Always recomputed with
/// derive(), never edited in place.
struct DerivedParams {
  double omega0 = 0.0;      // 1/sqrt(LC), rad/s
  double beta = 0.0;        // 2 pi L I_c / Phi0
  double zeta = 0.0;        // 1 / (2 omega0 R C)
  double q_factor = 0.0;    // R sqrt(C/L)
  double phi_d = 0.0;       // I_d L / Phi0
  double omega = 0.0;       // omega_d / omega0
  double phi_x = 0.0;       // Phi_x / Phi0
  double Omega = 0.0;       // [(4 e^2 / hbar) sqrt(L/C)]^(1/2), wavenumber of the Josephson cosine
  double j_coeff = 0.0;     // I_c / (2 e omega0), Josephson energy in units of hbar omega0
  double x_per_phi0 = 0.0;  // 2 pi / Omega, one flux quantum in oscillator length units
};

/// Multipliers of the dynamics-preserving transformation C -> aC, L -> bL.
struct ScalingFactors {
  double a = 1.0;
  double b = 1.0;
};

inline void validate(const CircuitParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(std::isfinite(p.C) && p.C > 0.0, "capacitance must be positive");
  require(std::isfinite(p.L) && p.L > 0.0, "inductance must be positive");
  require(std::isfinite(p.R) && p.R > 0.0, "resistance must be positive");
  require(std::isfinite(p.I_c) && p.I_c >= 0.0, "critical current must be non-negative");
  require(std::isfinite(p.I_d) && p.I_d >= 0.0, "drive current must be non-negative");
  require(std::isfinite(p.omega_d) && p.omega_d > 0.0, "drive frequency must be positive");
  require(std::isfinite(p.Phi_x), "bias flux must be finite");
}

inline void validate(const ScalingFactors& s) {
  if (!(std::isfinite(s.a) && s.a > 0.0)) throw ConfigError("scale_a must be positive");
  if (!(std::isfinite(s.b) && s.b > 0.0)) throw ConfigError("scale_b must be positive");
}

inline DerivedParams derive(const CircuitParams& p,
                            const PhysicalConstants& k = PhysicalConstants::codata2018()) {
  validate(p);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  DerivedParams d;
  d.omega0 = 1.0 / std::sqrt(p.L * p.C);
  d.beta = two_pi * p.L * p.I_c / k.phi0;
  d.zeta = 1.0 / (2.0 * d.omega0 * p.R * p.C);
  d.q_factor = p.R * std::sqrt(p.C / p.L);
  d.phi_d = p.I_d * p.L / k.phi0;
  d.omega = p.omega_d / d.omega0;
  d.phi_x = p.Phi_x / k.phi0;
  d.Omega = std::sqrt(4.0 * k.e * k.e / k.hbar * std::sqrt(p.L / p.C));
  d.j_coeff = p.I_c / (2.0 * k.e * d.omega0);
  d.x_per_phi0 = two_pi / d.Omega;
  return d;
}

/// Critical current giving a requested screening parameter beta at inductance L.
inline double critical_current_for_beta(double beta, double L,
                                        const PhysicalConstants& k = PhysicalConstants::codata2018()) {
  if (!(std::isfinite(L) && L > 0.0)) throw ConfigError("inductance must be positive");
  if (!(std::isfinite(beta) && beta >= 0.0)) throw ConfigError("beta must be non-negative");
  return beta * k.phi0 / (2.0 * std::numbers::pi * L);
}

/// C -> aC, L -> bL, R -> sqrt(b/a) R, omega_d -> omega_d / sqrt(ab), and both
/// currents divided by b. For b = 1 this is the textbook transformation; the
/// 1/b current rule keeps beta and phi_d fixed for b != 1 as well.
inline CircuitParams apply_scaling(const CircuitParams& p, const ScalingFactors& s) {
  validate(s);
  CircuitParams q = p;
  q.C = s.a * p.C;
  q.L = s.b * p.L;
  q.R = std::sqrt(s.b / s.a) * p.R;
  q.I_c = p.I_c / s.b;
  q.I_d = p.I_d / s.b;
  q.omega_d = p.omega_d / std::sqrt(s.a * s.b);
  return q;
}

}  // namespace squidqct
