#pragma once

// Normalized RSJ equation of motion
//
//   phi'' + 2 zeta phi' + phi + (beta / 2pi) sin[2pi (phi + phi_x)] = phi_d sin(omega tau)
//
// integrated with fixed-step classical RK4 so that every drive period is an
// integer number of steps and stroboscopic samples fall exactly on the grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/errors.hpp"
#include "squidqct/section.hpp"

namespace squidqct {

struct ClassicalState {
  double phi = 0.0;     // (Phi - Phi_x) / Phi0
  double phidot = 0.0;  // d phi / d tau
  double tau = 0.0;     // omega0 t
};

struct IntegratorConfig {
  std::size_t steps_per_period = 1000;
  std::size_t n_periods = 100;
  std::size_t transient_periods = 50;
  std::size_t record_stride = 1;  // keep every k-th step in the returned series
  ClassicalState initial_state{};
};

inline void validate(const IntegratorConfig& cfg) {
  if (cfg.steps_per_period < 100) throw ConfigError("steps_per_period must be at least 100");
  if (cfg.n_periods == 0) throw ConfigError("n_periods must be positive");
  if (cfg.transient_periods >= cfg.n_periods)
    throw ConfigError("transient_periods must be smaller than n_periods");
  if (cfg.record_stride == 0 || cfg.steps_per_period % cfg.record_stride != 0)
    throw ConfigError("record_stride must divide steps_per_period");
  const auto& s = cfg.initial_state;
  if (!std::isfinite(s.phi) || !std::isfinite(s.phidot) || !std::isfinite(s.tau))
    throw ConfigError("initial state must be finite");
}

/// Drive period in normalized time.
inline double drive_period(const DerivedParams& d) { return 2.0 * std::numbers::pi / d.omega; }

/// Returns (d phi / d tau, d^2 phi / d tau^2).
inline std::pair<double, double> rsj_rhs(const ClassicalState& s, const DerivedParams& d) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double accel = -2.0 * d.zeta * s.phidot - s.phi -
                       d.beta / two_pi * std::sin(two_pi * (s.phi + d.phi_x)) +
                       d.phi_d * std::sin(d.omega * s.tau);
  return {s.phidot, accel};
}

/// Oscillator energy 1/2 phi'^2 + 1/2 phi^2 - (beta / 4 pi^2) cos[2pi (phi + phi_x)].
inline double rsj_energy(const ClassicalState& s, const DerivedParams& d) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return 0.5 * s.phidot * s.phidot + 0.5 * s.phi * s.phi -
         d.beta / (two_pi * two_pi) * std::cos(two_pi * (s.phi + d.phi_x));
}

/// Streams every RK4 step to `visit(step_index, state)`, starting with step 0
/// (the initial state). Throws DivergenceError once |phi| exceeds 1e6.
template <class Visitor>
void integrate_classical(const DerivedParams& d, const IntegratorConfig& cfg, Visitor&& visit) {
  validate(cfg);
  const double dt = drive_period(d) / static_cast<double>(cfg.steps_per_period);
  const std::uint64_t total = static_cast<std::uint64_t>(cfg.steps_per_period) * cfg.n_periods;
  const double tau0 = cfg.initial_state.tau;

  ClassicalState s = cfg.initial_state;
  visit(std::uint64_t{0}, s);
  for (std::uint64_t k = 0; k < total; ++k) {
    const double t = tau0 + static_cast<double>(k) * dt;
    auto eval = [&](double phi, double phidot, double tau) {
      return rsj_rhs(ClassicalState{phi, phidot, tau}, d);
    };
    const auto [a1, b1] = eval(s.phi, s.phidot, t);
    const auto [a2, b2] = eval(s.phi + 0.5 * dt * a1, s.phidot + 0.5 * dt * b1, t + 0.5 * dt);
    const auto [a3, b3] = eval(s.phi + 0.5 * dt * a2, s.phidot + 0.5 * dt * b2, t + 0.5 * dt);
    const auto [a4, b4] = eval(s.phi + dt * a3, s.phidot + dt * b3, t + dt);
    s.phi += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    s.phidot += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    s.tau = tau0 + static_cast<double>(k + 1) * dt;
    if (!(std::abs(s.phi) <= 1e6) || !std::isfinite(s.phidot))
      throw DivergenceError("RSJ integration diverged at tau = " + std::to_string(s.tau));
    visit(k + 1, s);
  }
}

/// Recorded classical trajectory; states[i] is step i * stride.
struct ClassicalSeries {
  std::vector<ClassicalState> states;
  std::size_t stride = 1;
  std::size_t steps_per_period = 0;
};

inline ClassicalSeries integrate_classical(const DerivedParams& d, const IntegratorConfig& cfg) {
  ClassicalSeries out;
  out.stride = cfg.record_stride;
  out.steps_per_period = cfg.steps_per_period;
  out.states.reserve(cfg.steps_per_period / std::max<std::size_t>(cfg.record_stride, 1) *
                         cfg.n_periods + 1);
  integrate_classical(d, cfg, [&](std::uint64_t step, const ClassicalState& s) {
    if (step % out.stride == 0) out.states.push_back(s);
  });
  return out;
}

/// Stroboscopic (phi, phi') samples at tau = tau0 + n T for n > transient_periods.
inline PoincareSection classical_poincare(const ClassicalSeries& series, const DerivedParams& d,
                                          const IntegratorConfig& cfg) {
  (void)d;
  PoincareSection sec;
  sec.source = SectionSource::classical;
  sec.units = SectionUnits::dimensionless;
  if (series.stride == 0 || series.steps_per_period % series.stride != 0) return sec;
  const std::size_t per_period = series.steps_per_period / series.stride;
  for (std::size_t n = cfg.transient_periods + 1;; ++n) {
    const std::size_t idx = n * per_period;
    if (idx >= series.states.size()) break;
    sec.points.push_back({series.states[idx].phi, series.states[idx].phidot});
  }
  return sec;
}

/// Section without storing the trajectory; for long production runs.
inline PoincareSection classical_section(const DerivedParams& d, const IntegratorConfig& cfg) {
  PoincareSection sec;
  sec.source = SectionSource::classical;
  sec.units = SectionUnits::dimensionless;
  const std::uint64_t spp = cfg.steps_per_period;
  integrate_classical(d, cfg, [&](std::uint64_t step, const ClassicalState& s) {
    if (step % spp == 0 && step / spp > cfg.transient_periods) sec.points.push_back({s.phi, s.phidot});
  });
  return sec;
}

}  // namespace squidqct
