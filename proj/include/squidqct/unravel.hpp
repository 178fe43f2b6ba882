#pragma once

// Stochastic unravellings of the ring master equation with the single Lindblad
// operator L = sqrt(2 zeta) a.
//
// QSD (Ito):
//   |d psi> = -i H |psi> dt + [<L+> L - L+L/2 - <L+><L>/2] |psi> dt + [L - <L>] |psi> dxi
// Quantum jumps:
//   |d psi> = -i H |psi> dt - [L+L - <L+L>]/2 |psi> dt + [L / sqrt(<L+L>) - 1] |psi> dN
//
// The deterministic part of each increment is integrated with RK4 (frozen H and
// frozen noise for the step), the stochastic part is first order with the noise
// coefficient taken at the start of the step, and the state is renormalized.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "squidqct/errors.hpp"
#include "squidqct/hilbert.hpp"
#include "squidqct/noise.hpp"

namespace squidqct {

struct QuantumState {
  CVec amplitudes;
  double tau = 0.0;
};

enum class Unravelling { qsd, jumps };

inline const char* to_string(Unravelling u) { return u == Unravelling::qsd ? "qsd" : "jumps"; }

inline NoiseKind noise_kind_for(Unravelling u) {
  return u == Unravelling::qsd ? NoiseKind::qsd_wiener : NoiseKind::jumps_poisson;
}

/// L and its adjoint, stored sparse. A real L also keeps real copies.
struct Lindblad {
  SpMat op;
  SpMat adj;
  bool real = false;
  RSpMat op_re;
  RSpMat adj_re;
};

inline Lindblad make_lindblad(const SpMat& L) {
  Lindblad out;
  out.op = L;
  out.adj = SpMat(L.adjoint());
  out.op.makeCompressed();
  out.adj.makeCompressed();
  out.real = true;
  for (int k = 0; k < out.op.nonZeros(); ++k)
    if (out.op.valuePtr()[k].imag() != 0.0) out.real = false;
  if (out.real) {
    out.op_re = out.op.real();
    out.adj_re = out.adj.real();
    out.op_re.makeCompressed();
    out.adj_re.makeCompressed();
  }
  return out;
}

namespace detail {
inline void real_times(const RSpMat& m, const CVec& in, CVec& out) {
  out.resize(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) out(r) = row_dot(m, r, in.data());
}
}  // namespace detail

/// out = L in
inline void apply_l(const Lindblad& l, const CVec& in, CVec& out) {
  if (l.real) detail::real_times(l.op_re, in, out);
  else out.noalias() = l.op * in;
}

/// out = L+ in
inline void apply_l_adj(const Lindblad& l, const CVec& in, CVec& out) {
  if (l.real) detail::real_times(l.adj_re, in, out);
  else out.noalias() = l.adj * in;
}

/// sqrt(2 zeta) a in the basis of `ops`.
inline Lindblad damping_lindblad(const OperatorSet& ops) {
  return make_lindblad(SpMat(std::sqrt(2.0 * ops.zeta) * ops.a_sparse));
}

/// Coherent state |alpha> expressed in a basis displaced by `center` along x.
inline CVec coherent_state(std::size_t dim, cplx alpha, double center = 0.0) {
  const cplx beta = alpha - center / std::sqrt(2.0);
  CVec psi(dim);
  psi(0) = std::exp(-0.5 * std::norm(beta));
  for (std::size_t n = 1; n < dim; ++n)
    psi(static_cast<Eigen::Index>(n)) =
        psi(static_cast<Eigen::Index>(n - 1)) * beta / std::sqrt(static_cast<double>(n));
  psi /= psi.norm();
  return psi;
}

inline CVec number_state(std::size_t dim, std::size_t n) {
  if (n >= dim) throw ConfigError("number state outside the basis");
  CVec psi = CVec::Zero(static_cast<Eigen::Index>(dim));
  psi(static_cast<Eigen::Index>(n)) = 1.0;
  return psi;
}

namespace detail {

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

inline void renormalize(CVec& psi) {
  const double n2 = psi.squaredNorm();
  if (std::abs(n2 - 1.0) > 1e-13) psi /= std::sqrt(n2);
}

inline void check_pre_norm(const CVec& psi, const char* who) {
  const double n = psi.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 0.1)
    throw StepSizeError(std::string(who) + ": norm before renormalization is " + sci(n) +
                        "; reduce dt");
}

/// Buffers reused from step to step.
struct StepWorkspace {
  CVec k1, k2, k3, k4, stage, tmp1, tmp2, l_psi;

  void resize(Eigen::Index n) {
    for (CVec* v : {&k1, &k2, &k3, &k4, &stage, &tmp1, &tmp2, &l_psi})
      if (v->size() != n) v->resize(n);
  }
};

/// psi <- psi + dt/6 (k1 + 2 k2 + 2 k3 + k4) for an autonomous drift f(in, out).
template <class Drift>
void rk4_increment(const CVec& psi, double dt, StepWorkspace& w, Drift&& f, CVec& out) {
  f(psi, w.k1);
  w.stage = psi + (0.5 * dt) * w.k1;
  f(w.stage, w.k2);
  w.stage = psi + (0.5 * dt) * w.k2;
  f(w.stage, w.k3);
  w.stage = psi + dt * w.k3;
  f(w.stage, w.k4);
  out = psi + (dt / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
}

/// QSD drift with expectations taken on the normalized stage vector.
template <class Ham>
struct QsdDrift {
  const Ham& h;
  const Lindblad& l;
  StepWorkspace& w;

  void operator()(const CVec& psi, CVec& out) const {
    const double n2 = psi.squaredNorm();
    apply_l(l, psi, w.tmp1);
    const cplx ex_l = psi.dot(w.tmp1) / n2;
    apply_l_adj(l, w.tmp1, w.tmp2);
    apply(h, psi, out);
    out *= cplx(0.0, -1.0);
    out += std::conj(ex_l) * w.tmp1 - 0.5 * w.tmp2 - (0.5 * std::norm(ex_l)) * psi;
  }
};

/// No-jump drift -iH psi - (L+L - <L+L>) psi / 2.
template <class Ham>
struct NoJumpDrift {
  const Ham& h;
  const Lindblad& l;
  StepWorkspace& w;

  void operator()(const CVec& psi, CVec& out) const {
    const double n2 = psi.squaredNorm();
    apply_l(l, psi, w.tmp1);
    const double ex_ll = w.tmp1.squaredNorm() / n2;
    apply_l_adj(l, w.tmp1, w.tmp2);
    apply(h, psi, out);
    out *= cplx(0.0, -1.0);
    out += -0.5 * w.tmp2 + (0.5 * ex_ll) * psi;
  }
};

template <class Ham>
struct SchrodingerDrift {
  const Ham& h;

  void operator()(const CVec& psi, CVec& out) const {
    apply(h, psi, out);
    out *= cplx(0.0, -1.0);
  }
};

}  // namespace detail

struct JumpStep {
  QuantumState state;
  bool jumped = false;
};

/// Largest jump probability per step accepted by jumps_step.
inline constexpr double kMaxJumpProbability = 0.1;

template <class Ham>
QuantumState qsd_step(QuantumState state, const Ham& h, const Lindblad& l, double dt, NoiseStream& noise,
                      detail::StepWorkspace& w) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const CVec& psi = state.amplitudes;
  w.resize(psi.size());
  const cplx dxi = noise.wiener(dt);

  apply_l(l, psi, w.l_psi);
  const cplx ex_l = psi.dot(w.l_psi) / psi.squaredNorm();

  CVec next;
  detail::rk4_increment(psi, dt, w, detail::QsdDrift<Ham>{h, l, w}, next);
  next += dxi * (w.l_psi - ex_l * psi);
  detail::check_pre_norm(next, "qsd_step");
  detail::renormalize(next);
  state.amplitudes = std::move(next);
  state.tau += dt;
  return state;
}

template <class Ham>
QuantumState qsd_step(QuantumState state, const Ham& h, const Lindblad& l, double dt, NoiseStream& noise) {
  detail::StepWorkspace w;
  return qsd_step(std::move(state), h, l, dt, noise, w);
}

template <class Ham>
JumpStep jumps_step(QuantumState state, const Ham& h, const Lindblad& l, double dt, NoiseStream& noise,
                    detail::StepWorkspace& w) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const CVec& psi = state.amplitudes;
  w.resize(psi.size());
  apply_l(l, psi, w.l_psi);
  const double rate = w.l_psi.squaredNorm() / psi.squaredNorm();
  const double prob = rate * dt;
  if (prob > kMaxJumpProbability)
    throw StepSizeError("jumps_step: jump probability " + detail::sci(prob) + " per step exceeds " +
                        detail::sci(kMaxJumpProbability) + "; reduce dt");
  const double u = noise.uniform();

  JumpStep out;
  if (u < prob) {
    state.amplitudes = w.l_psi / w.l_psi.norm();
    out.jumped = true;
  } else {
    CVec next;
    detail::rk4_increment(psi, dt, w, detail::NoJumpDrift<Ham>{h, l, w}, next);
    detail::check_pre_norm(next, "jumps_step");
    detail::renormalize(next);
    state.amplitudes = std::move(next);
  }
  state.tau += dt;
  out.state = std::move(state);
  return out;
}

template <class Ham>
JumpStep jumps_step(QuantumState state, const Ham& h, const Lindblad& l, double dt, NoiseStream& noise) {
  detail::StepWorkspace w;
  return jumps_step(std::move(state), h, l, dt, noise, w);
}

/// Unitary part alone: RK4 on -iH, renormalized.
template <class Ham>
QuantumState schrodinger_step(QuantumState state, const Ham& h, double dt, detail::StepWorkspace& w) {
  w.resize(state.amplitudes.size());
  CVec next;
  detail::rk4_increment(state.amplitudes, dt, w, detail::SchrodingerDrift<Ham>{h}, next);
  detail::check_pre_norm(next, "schrodinger_step");
  detail::renormalize(next);
  state.amplitudes = std::move(next);
  state.tau += dt;
  return state;
}

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryConfig {
  double dt = 0.0;
  std::size_t steps_per_period = 4096;
  std::size_t n_periods = 1;
  std::size_t transient_periods = 0;
  std::size_t record_stride = 1;
  QuantumState initial_state;
  Unravelling unravelling = Unravelling::qsd;
  // Abort once sum_{n > 3N/4} |psi_n|^2 exceeds this.
  double truncation_tol = 1e-8;
  // Abort at start when dt * max_tau ||H'(tau)|| exceeds this (RK4 is stable to 2 sqrt 2).
  double max_dt_norm = 1.0;
  // Jumps only: 0 picks the number of dissipative sub-steps per step from the
  // current jump rate; 1 forces unsplit jumps_step; k > 1 forces a symmetric
  // split with k sub-steps on each side of the Hamiltonian step.
  std::size_t jump_substeps = 0;
};

/// dt = (2 pi / omega) / steps_per_period, so sections land on step boundaries.
inline TrajectoryConfig aligned_config(const DriveSignal& drive, std::size_t steps_per_period,
                                       std::size_t n_periods, std::size_t transient_periods,
                                       QuantumState initial, Unravelling kind) {
  TrajectoryConfig cfg;
  cfg.steps_per_period = steps_per_period;
  cfg.dt = 2.0 * std::numbers::pi / drive.omega / static_cast<double>(steps_per_period);
  cfg.n_periods = n_periods;
  cfg.transient_periods = transient_periods;
  cfg.initial_state = std::move(initial);
  cfg.unravelling = kind;
  return cfg;
}

struct TrajectorySample {
  std::uint64_t step = 0;
  double tau = 0.0;
  double ex_x = 0.0;
  double ex_p = 0.0;
  double ex_n = 0.0;
  double ex_x2 = 0.0;
  double norm_drift = 0.0;
  std::uint64_t cum_jumps = 0;
};

struct TrajectorySeries {
  std::vector<TrajectorySample> samples;
  std::size_t stride = 1;
  std::size_t steps_per_period = 0;
  std::size_t transient_periods = 0;
  Unravelling unravelling = Unravelling::qsd;
  std::uint64_t seed = 0;
};

inline TrajectorySample measure(const OperatorSet& ops, const CVec& psi, std::uint64_t step, double tau,
                                std::uint64_t jumps, CVec& tmp) {
  TrajectorySample s;
  s.step = step;
  s.tau = tau;
  tmp.noalias() = ops.x_sparse * psi;
  s.ex_x = psi.dot(tmp).real();
  s.ex_x2 = tmp.squaredNorm();
  tmp.noalias() = ops.p_sparse * psi;
  s.ex_p = psi.dot(tmp).real();
  tmp.noalias() = ops.a_sparse * psi;
  s.ex_n = tmp.squaredNorm();
  s.norm_drift = std::abs(psi.norm() - 1.0);
  s.cum_jumps = jumps;
  return s;
}

/// Probability held by basis states n > 3N/4.
inline double truncation_tail(const CVec& psi) {
  const Eigen::Index n = psi.size();
  const Eigen::Index first = 3 * n / 4 + 1;
  if (first >= n) return 0.0;
  return psi.tail(n - first).squaredNorm();
}

inline void validate(const TrajectoryConfig& cfg, const OperatorSet& ops, const DriveSignal& drive) {
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  if (cfg.steps_per_period == 0 || cfg.n_periods == 0) throw ConfigError("empty trajectory");
  const double period = 2.0 * std::numbers::pi / drive.omega;
  if (std::abs(cfg.dt * static_cast<double>(cfg.steps_per_period) - period) > 1e-12 * period)
    throw ConfigError("dt * steps_per_period must equal the drive period");
  if (cfg.record_stride == 0 || cfg.steps_per_period % cfg.record_stride != 0)
    throw ConfigError("record_stride must divide steps_per_period");
  if (static_cast<std::size_t>(cfg.initial_state.amplitudes.size()) != ops.dim)
    throw ConfigError("initial state dimension does not match the basis");
  if (std::abs(cfg.initial_state.amplitudes.norm() - 1.0) > 1e-10)
    throw ConfigError("initial state must be normalized");
  const double stiffness = cfg.dt * hamiltonian_norm_bound(ops, drive);
  if (stiffness > cfg.max_dt_norm)
    throw StepSizeError("dt * ||H|| = " + detail::sci(stiffness) + " exceeds " + detail::sci(cfg.max_dt_norm) +
                        "; increase steps_per_period");
}

/// Evolves one trajectory, recording expectations every record_stride steps
/// (including step 0). Deterministic for a given noise seed.
inline TrajectorySeries run_trajectory(const OperatorSet& ops, const DriveSignal& drive, const TrajectoryConfig& cfg,
                                       NoiseStream noise) {
  validate(cfg, ops, drive);
  if (noise.kind() != noise_kind_for(cfg.unravelling))
    throw ConfigError("noise stream kind does not match the unravelling");

  const Lindblad l = damping_lindblad(ops);
  detail::StepWorkspace w;
  CVec tmp(static_cast<Eigen::Index>(ops.dim));

  TrajectorySeries out;
  out.stride = cfg.record_stride;
  out.steps_per_period = cfg.steps_per_period;
  out.transient_periods = cfg.transient_periods;
  out.unravelling = cfg.unravelling;
  out.seed = noise.seed();
  const std::uint64_t total = static_cast<std::uint64_t>(cfg.steps_per_period) * cfg.n_periods;
  out.samples.reserve(total / cfg.record_stride + 1);

  const double tau0 = cfg.initial_state.tau;
  QuantumState state = cfg.initial_state;
  std::uint64_t jumps = 0;
  out.samples.push_back(measure(ops, state.amplitudes, 0, tau0, 0, tmp));

  for (std::uint64_t k = 0; k < total; ++k) {
    const double tau = tau0 + static_cast<double>(k) * cfg.dt;
    const DrivenHamiltonian h = driven_hamiltonian(ops, drive, tau);
    if (cfg.unravelling == Unravelling::qsd) {
      state = qsd_step(std::move(state), h, l, cfg.dt, noise, w);
    } else {
      std::size_t sub = cfg.jump_substeps;
      if (sub == 0) {
        apply_l(l, state.amplitudes, w.l_psi);
        const double rate_dt = w.l_psi.squaredNorm() * cfg.dt;
        sub = rate_dt <= 0.5 * kMaxJumpProbability
                  ? 1
                  : static_cast<std::size_t>(std::ceil(rate_dt / (0.5 * kMaxJumpProbability)));
      }
      if (sub == 1) {
        auto r = jumps_step(std::move(state), h, l, cfg.dt, noise, w);
        jumps += r.jumped;
        state = std::move(r.state);
      } else {
        // Symmetric split: dissipation (dt/2), Hamiltonian (dt), dissipation (dt/2).
        const double h_dt = 0.5 * cfg.dt / static_cast<double>(sub);
        for (std::size_t i = 0; i < sub; ++i) {
          auto r = jumps_step(std::move(state), ZeroOperator{}, l, h_dt, noise, w);
          jumps += r.jumped;
          state = std::move(r.state);
        }
        state = schrodinger_step(std::move(state), h, cfg.dt, w);
        for (std::size_t i = 0; i < sub; ++i) {
          auto r = jumps_step(std::move(state), ZeroOperator{}, l, h_dt, noise, w);
          jumps += r.jumped;
          state = std::move(r.state);
        }
      }
    }
    state.tau = tau0 + static_cast<double>(k + 1) * cfg.dt;

    const double tail = truncation_tail(state.amplitudes);
    if (!(tail <= cfg.truncation_tol))
      throw TruncationError("basis truncation: tail probability " + detail::sci(tail) + " at tau = " +
                            detail::sci(state.tau) + " exceeds " + detail::sci(cfg.truncation_tol) +
                            "; enlarge the basis");
    if ((k + 1) % cfg.record_stride == 0)
      out.samples.push_back(measure(ops, state.amplitudes, k + 1, state.tau, jumps, tmp));
  }
  return out;
}

struct EnsembleRow {
  double tau = 0.0;
  double mean_x = 0.0, se_x = 0.0;
  double mean_p = 0.0, se_p = 0.0;
  double mean_n = 0.0, se_n = 0.0;
};

struct EnsembleResult {
  std::vector<TrajectorySeries> runs;
  std::vector<EnsembleRow> summary;
};

/// Mean and standard error of sample-wise expectations, folded in trajectory order.
inline std::vector<EnsembleRow> ensemble_summary(const std::vector<TrajectorySeries>& runs) {
  std::vector<EnsembleRow> rows;
  if (runs.empty()) return rows;
  const std::size_t n_samples = runs.front().samples.size();
  const double n = static_cast<double>(runs.size());
  rows.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    double sx = 0, sp = 0, sn = 0, sxx = 0, spp = 0, snn = 0;
    for (const auto& r : runs) {
      const auto& s = r.samples[i];
      sx += s.ex_x; sp += s.ex_p; sn += s.ex_n;
      sxx += s.ex_x * s.ex_x; spp += s.ex_p * s.ex_p; snn += s.ex_n * s.ex_n;
    }
    auto se = [&](double sum, double sq) {
      if (runs.size() < 2) return 0.0;
      const double mean = sum / n;
      const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
      return std::sqrt(var / n);
    };
    rows[i] = {runs.front().samples[i].tau, sx / n, se(sx, sxx), sp / n, se(sp, spp), sn / n, se(sn, snn)};
  }
  return rows;
}

/// Trajectory k runs with seed split_seed(base_seed, k); at most `workers`
/// trajectories run concurrently.
inline EnsembleResult run_ensemble(const OperatorSet& ops, const DriveSignal& drive, const TrajectoryConfig& cfg,
                                   std::size_t n_traj, std::uint64_t base_seed, std::size_t workers = 1) {
  if (n_traj == 0) throw ConfigError("n_traj must be at least 1");
  EnsembleResult out;
  out.runs.resize(n_traj);
  std::vector<std::exception_ptr> errors(n_traj);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < n_traj; k = next++) {
      try {
        out.runs[k] = run_trajectory(ops, drive, cfg,
                                     NoiseStream(split_seed(base_seed, k), noise_kind_for(cfg.unravelling)));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, n_traj);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  out.summary = ensemble_summary(out.runs);
  return out;
}

}  // namespace squidqct
