#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "squidqct/unravel.hpp"
#include "../support/master_equation.hpp"

using namespace squidqct;

namespace {

DerivedParams oscillator(double zeta, double j = 0.0, double Omega = 0.5) {
  DerivedParams d;
  d.Omega = Omega;
  d.j_coeff = j;
  d.zeta = zeta;
  d.omega = 1.0;
  d.x_per_phi0 = 2.0 * M_PI / Omega;
  return d;
}

Lindblad zero_lindblad(std::size_t n) { return make_lindblad(SpMat(n, n)); }

}  // namespace

TEST(Unravel, NothingToDoLeavesStateBitwiseUnchanged) {
  CVec psi = CVec::Random(20);
  psi.normalize();
  const auto l = zero_lindblad(20);
  QuantumState s{psi, 0.0};
  NoiseStream noise(1, NoiseKind::qsd_wiener);
  for (int i = 0; i < 50; ++i) s = qsd_step(s, ZeroOperator{}, l, 0.01, noise);
  EXPECT_EQ(s.amplitudes, psi);
  NoiseStream jn(1, NoiseKind::jumps_poisson);
  QuantumState t{psi, 0.0};
  for (int i = 0; i < 50; ++i) {
    auto r = jumps_step(t, ZeroOperator{}, l, 0.01, jn);
    EXPECT_FALSE(r.jumped);
    t = r.state;
  }
  EXPECT_EQ(t.amplitudes, psi);
  EXPECT_NEAR(t.tau, 0.5, 1e-14);
}

TEST(Unravel, VacuumIsDarkForQsd) {
  const auto ops = build_operators(16, oscillator(0.2));
  const auto l = damping_lindblad(ops);
  QuantumState s{number_state(16, 0), 0.0};
  NoiseStream noise(3, NoiseKind::qsd_wiener);
  for (int i = 0; i < 100; ++i) s = qsd_step(s, ZeroOperator{}, l, 0.01, noise);
  EXPECT_EQ(s.amplitudes, number_state(16, 0));
}

TEST(Unravel, JumpTakesOneQuantumToVacuum) {
  const auto ops = build_operators(16, oscillator(0.5));
  const auto l = damping_lindblad(ops);
  QuantumState s{number_state(16, 1), 0.0};
  NoiseStream noise(5, NoiseKind::jumps_poisson);
  bool jumped = false;
  for (int i = 0; i < 10000 && !jumped; ++i) {
    auto r = jumps_step(s, ZeroOperator{}, l, 0.01, noise);
    jumped = r.jumped;
    s = r.state;
    if (!jumped) {
      EXPECT_NEAR(std::norm(s.amplitudes(1)), 1.0, 1e-12);
    }
  }
  ASSERT_TRUE(jumped);
  EXPECT_NEAR(std::norm(s.amplitudes(0)), 1.0, 1e-15);
}

TEST(Unravel, JumpProbabilityGate) {
  const auto ops = build_operators(16, oscillator(0.5));
  const auto l = damping_lindblad(ops);
  NoiseStream noise(5, NoiseKind::jumps_poisson);
  // <L+L> = 2 zeta n = 10 for n = 10, so dt = 0.02 gives p = 0.2.
  EXPECT_THROW(jumps_step(QuantumState{number_state(16, 10), 0.0}, ZeroOperator{}, l, 0.02, noise),
               StepSizeError);
}

TEST(Unravel, OversizedStepIsRejected) {
  const auto ops = build_operators(16, oscillator(0.0));
  const auto l = damping_lindblad(ops);
  NoiseStream noise(5, NoiseKind::qsd_wiener);
  // RK4 on -iH is unstable far beyond dt ||H|| = 2.8; the norm check catches it.
  EXPECT_THROW(qsd_step(QuantumState{number_state(16, 15), 0.0}, ops.h_static_sparse, l, 0.5, noise),
               StepSizeError);
}

TEST(Unravel, CoherentOscillationWithoutDamping) {
  const std::size_t n = 48;
  const auto ops = build_operators(n, oscillator(0.0));
  const DriveSignal still{0.0, 0.0, 1.0};
  auto cfg = aligned_config(still, 2048, 3, 0, QuantumState{coherent_state(n, cplx(2.0, 0.0)), 0.0},
                            Unravelling::qsd);
  cfg.record_stride = 32;
  const auto series = run_trajectory(ops, still, cfg, NoiseStream(1, NoiseKind::qsd_wiener));
  for (const auto& s : series.samples) {
    EXPECT_NEAR(s.ex_x, 2.0 * std::sqrt(2.0) * std::cos(s.tau), 1e-6);
    EXPECT_NEAR(s.ex_p, -2.0 * std::sqrt(2.0) * std::sin(s.tau), 1e-6);
    EXPECT_LT(s.norm_drift, 1e-10);
  }
}

TEST(Unravel, TrajectoriesAreReproducible) {
  const auto ops = build_operators(48, oscillator(0.1, 2.0));
  const DriveSignal drive{0.5, 1.0, 1.0};
  for (auto kind : {Unravelling::qsd, Unravelling::jumps}) {
    auto cfg = aligned_config(drive, 512, 3, 0, QuantumState{coherent_state(48, cplx(1.0, 0.5)), 0.0}, kind);
    const auto a = run_trajectory(ops, drive, cfg, NoiseStream(9, noise_kind_for(kind)));
    const auto b = run_trajectory(ops, drive, cfg, NoiseStream(9, noise_kind_for(kind)));
    const auto c = run_trajectory(ops, drive, cfg, NoiseStream(10, noise_kind_for(kind)));
    ASSERT_EQ(a.samples.size(), 1537u);
    bool differs = false;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      EXPECT_EQ(a.samples[i].ex_x, b.samples[i].ex_x);
      EXPECT_EQ(a.samples[i].cum_jumps, b.samples[i].cum_jumps);
      EXPECT_LT(a.samples[i].norm_drift, 1e-10);
      differs |= a.samples[i].ex_x != c.samples[i].ex_x;
    }
    EXPECT_TRUE(differs);
  }
}

TEST(Unravel, EnsembleIndependentOfWorkerCount) {
  const auto ops = build_operators(32, oscillator(0.2));
  const DriveSignal still{0.0, 0.0, 1.0};
  auto cfg = aligned_config(still, 512, 2, 0, QuantumState{number_state(32, 3), 0.0}, Unravelling::jumps);
  cfg.record_stride = 64;
  const auto one = run_ensemble(ops, still, cfg, 12, 77, 1);
  const auto many = run_ensemble(ops, still, cfg, 12, 77, 4);
  ASSERT_EQ(one.summary.size(), many.summary.size());
  for (std::size_t i = 0; i < one.summary.size(); ++i) {
    EXPECT_EQ(one.summary[i].mean_n, many.summary[i].mean_n);
    EXPECT_EQ(one.summary[i].se_n, many.summary[i].se_n);
  }
}

TEST(Unravel, SplitJumpStepperAgreesWithMasterEquation) {
  const double zeta = 0.3;
  const std::size_t n = 32;
  const auto ops = build_operators(n, oscillator(zeta));
  const DriveSignal still{0.0, 0.0, 1.0};
  auto cfg = aligned_config(still, 512, 1, 0, QuantumState{number_state(n, 4), 0.0}, Unravelling::jumps);
  cfg.record_stride = 128;

  std::vector<double> times;
  for (std::size_t k = 0; k <= 4; ++k) times.push_back(k * 128 * cfg.dt);
  const CMat l = std::sqrt(2.0 * zeta) * ops.a;
  const CVec psi0 = number_state(n, 4);
  const auto exact = oracle::evolve([&](double) { return ops.h_static; }, l, psi0 * psi0.adjoint(), 1e-3, times,
                                    [&](const CMat& rho) { return (ops.a.adjoint() * ops.a * rho).trace().real(); });
  for (std::size_t sub : {1u, 3u}) {
    cfg.jump_substeps = sub;
    const auto ens = run_ensemble(ops, still, cfg, 400, 5, 2);
    ASSERT_EQ(ens.summary.size(), exact.size());
    for (std::size_t i = 0; i < exact.size(); ++i)
      EXPECT_NEAR(ens.summary[i].mean_n, exact[i], 4.0 * ens.summary[i].se_n + 1e-9)
          << "substeps " << sub << " tau " << ens.summary[i].tau;
  }
}

// x'' + 2 zeta x' + x = x_amp sin(tau) on resonance: steady amplitude x_amp / (2 zeta).
TEST(Unravel, LinearResponseAmplitude) {
  const double zeta = 0.1, x_amp = 1.0;
  const std::size_t n = 64;
  const auto ops = build_operators(n, oscillator(zeta));
  const DriveSignal drive{0.0, x_amp, 1.0};
  auto cfg = aligned_config(drive, 1024, 25, 0, QuantumState{number_state(n, 0), 0.0}, Unravelling::qsd);
  cfg.record_stride = 16;
  const auto series = run_trajectory(ops, drive, cfg, NoiseStream(21, NoiseKind::qsd_wiener));
  double peak = 0.0;
  for (const auto& s : series.samples)
    if (s.step >= 20u * 1024u) peak = std::max(peak, std::abs(s.ex_x));
  EXPECT_NEAR(peak, x_amp / (2.0 * zeta), 0.05 * x_amp / (2.0 * zeta));
}

TEST(Unravel, ClosedSystemConservesEnergy) {
  const std::size_t n = 48;
  const auto ops = build_operators(n, oscillator(0.0, 3.0));
  const Lindblad none = make_lindblad(SpMat(n, n));
  QuantumState s{coherent_state(n, cplx(1.5, -0.5)), 0.0};
  const double dt = 2.0 * M_PI / 2048;
  NoiseStream noise(1, NoiseKind::qsd_wiener);
  auto energy = [&](const CVec& psi) { return psi.dot(ops.h_static * psi).real(); };
  const double e0 = energy(s.amplitudes);
  for (int k = 0; k < 2048; ++k) s = qsd_step(std::move(s), ops.h_static_sparse, none, dt, noise);
  EXPECT_NEAR(energy(s.amplitudes), e0, 1e-6 * std::abs(e0));
}

TEST(Unravel, SingleMemberEnsembleIsTheTrajectory) {
  const auto ops = build_operators(32, oscillator(0.2, 1.0));
  const DriveSignal drive{0.3, 0.5, 1.0};
  auto cfg = aligned_config(drive, 512, 2, 0, QuantumState{coherent_state(32, cplx(0.5, 0.0)), 0.0},
                            Unravelling::qsd);
  const auto ens = run_ensemble(ops, drive, cfg, 1, 99);
  const auto one = run_trajectory(ops, drive, cfg, NoiseStream(split_seed(99, 0), NoiseKind::qsd_wiener));
  ASSERT_EQ(ens.summary.size(), one.samples.size());
  for (std::size_t i = 0; i < one.samples.size(); ++i) {
    EXPECT_EQ(ens.summary[i].mean_x, one.samples[i].ex_x);
    EXPECT_EQ(ens.summary[i].se_x, 0.0);
    EXPECT_LT(ens.summary[i].mean_n, 32.0);
  }
  for (const auto& s : one.samples) EXPECT_LT(s.norm_drift, 1e-8);
}

// Accumulated increments: mean O(sqrt(M) dt) and E|dxi|^2 / dt = 1 within 5% at M = 1e4.
TEST(Unravel, AccumulatedWienerIncrements) {
  const double dt = 2.0 * M_PI / 4096;
  const int m = 10000;
  NoiseStream noise(2024, NoiseKind::qsd_wiener);
  std::complex<double> sum = 0.0;
  double power = 0.0;
  for (int i = 0; i < m; ++i) {
    const auto z = noise.wiener(dt);
    sum += z;
    power += std::norm(z);
  }
  EXPECT_LT(std::abs(sum / static_cast<double>(m)), 4.0 * std::sqrt(dt / m));
  EXPECT_NEAR(power / m / dt, 1.0, 0.05);
}

// The state stays localized on the attractor: <x^2> - <x>^2 of order a few units.
TEST(Unravel, QsdLocalizationAtReferenceRing) {
  CircuitParams p;
  p.C = 1e-13;
  p.L = 3e-10;
  p.R = 100.0;
  p.I_c = critical_current_for_beta(2.0, p.L);
  p.I_d = 0.9e-6;
  p.omega_d = 1.0 / std::sqrt(p.L * p.C);
  p.Phi_x = 0.5 * PhysicalConstants::codata2018().phi0;
  const auto d = derive(p);
  const auto drive = make_drive(d);
  BasisOptions opt;
  opt.center = drive.x_bias;
  const std::size_t n = 192;
  const auto ops = build_operators(n, d, opt);
  auto cfg = aligned_config(drive, 4096, 30, 0,
                            QuantumState{coherent_state(n, cplx(drive.x_bias / std::sqrt(2.0), 0.0), opt.center), 0.0},
                            Unravelling::qsd);
  cfg.record_stride = 256;
  const auto series = run_trajectory(ops, drive, cfg, NoiseStream(3, NoiseKind::qsd_wiener));
  std::vector<double> var;
  double lo = 1e300, hi = -1e300;
  for (const auto& s : series.samples) {
    lo = std::min(lo, s.ex_x);
    hi = std::max(hi, s.ex_x);
    if (s.step >= 10u * 4096u) var.push_back(s.ex_x2 - s.ex_x * s.ex_x);
  }
  std::sort(var.begin(), var.end());
  EXPECT_LT(var[var.size() / 2], 10.0);
  EXPECT_LT(var[var.size() * 9 / 10], 30.0);
  // Excursions of order one flux quantum around the bias.
  EXPECT_GT(hi - lo, 0.3 * d.x_per_phi0);
  EXPECT_LT(hi - lo, 2.0 * d.x_per_phi0);
}

TEST(Unravel, TruncationGuard) {
  const std::size_t n = 16;
  const auto ops = build_operators(n, oscillator(0.0));
  const DriveSignal push{0.0, 6.0, 1.0};
  auto cfg = aligned_config(push, 1024, 2, 0, QuantumState{number_state(n, 0), 0.0}, Unravelling::qsd);
  EXPECT_THROW(run_trajectory(ops, push, cfg, NoiseStream(1, NoiseKind::qsd_wiener)), TruncationError);
}

TEST(Unravel, StiffnessGate) {
  const auto ops = build_operators(64, oscillator(0.1, 10.0));
  const DriveSignal still{0.0, 0.0, 1.0};
  auto cfg = aligned_config(still, 16, 1, 0, QuantumState{number_state(64, 0), 0.0}, Unravelling::qsd);
  EXPECT_THROW(run_trajectory(ops, still, cfg, NoiseStream(1, NoiseKind::qsd_wiener)), StepSizeError);
}

TEST(Unravel, ConfigChecks) {
  const auto ops = build_operators(16, oscillator(0.1));
  const DriveSignal still{0.0, 0.0, 1.0};
  auto cfg = aligned_config(still, 256, 1, 0, QuantumState{number_state(16, 0), 0.0}, Unravelling::qsd);
  EXPECT_THROW(run_trajectory(ops, still, cfg, NoiseStream(1, NoiseKind::jumps_poisson)), ConfigError);
  cfg.record_stride = 3;
  EXPECT_THROW(run_trajectory(ops, still, cfg, NoiseStream(1, NoiseKind::qsd_wiener)), ConfigError);
  cfg.record_stride = 1;
  cfg.initial_state.amplitudes *= 2.0;
  EXPECT_THROW(run_trajectory(ops, still, cfg, NoiseStream(1, NoiseKind::qsd_wiener)), ConfigError);
  EXPECT_THROW(number_state(16, 16), ConfigError);
  EXPECT_THROW(run_ensemble(ops, still, cfg, 0, 1), ConfigError);
}
