#include <gtest/gtest.h>

#include <cmath>

#include "squidqct/spectrum.hpp"

using namespace squidqct;

namespace {

CircuitParams ring(double beta) {
  CircuitParams p;
  p.C = 1e-13;
  p.L = 3e-10;
  p.R = 100.0;
  p.I_c = critical_current_for_beta(beta, p.L);
  p.omega_d = 1.0 / std::sqrt(p.L * p.C);
  p.Phi_x = 0.5 * PhysicalConstants::codata2018().phi0;
  return p;
}

}  // namespace

TEST(Spectrum, HermiteFunctionsAreOrthonormal) {
  const int n = 40;
  const double h = 0.01;
  std::vector<double> row(n);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  for (double y = -15.0; y <= 15.0; y += h) {
    hermite_functions(y, n, row.data());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) gram(i, j) += h * row[i] * row[j];
  }
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Spectrum, HermiteFunctionsSurviveLargeOrder) {
  std::vector<double> row(2000);
  hermite_functions(40.0, row.size(), row.data());
  for (double v : row) ASSERT_TRUE(std::isfinite(v));
  // The classical turning point of level n sits at sqrt(2n + 1); level 1999 reaches y = 40.
  EXPECT_GT(std::abs(row[1999]), 1e-3);
}

TEST(Spectrum, HarmonicLimit) {
  SpectrumScanConfig cfg;
  cfg.n_levels = 8;
  const auto f = spectrum_scan(ring(0.0), cfg, 64);
  for (std::size_t n = 0; n < 8; ++n) EXPECT_NEAR(f.energies[n], n + 0.5, 1e-10);
  // Ground-state density exp(-y^2)/sqrt(pi) crosses 0.05 at |y| = sqrt(-ln(0.05 sqrt(pi))).
  const double edge = std::sqrt(-std::log(0.05 * std::sqrt(M_PI)));
  EXPECT_NEAR(f.extents[0].x_hi - f.x_bias, edge, 0.02);
  EXPECT_NEAR(f.x_bias - f.extents[0].x_lo, edge, 0.02);
  EXPECT_TRUE(f.warnings.empty());
}

TEST(Spectrum, DoubleWellAtHalfFluxQuantum) {
  SpectrumScanConfig cfg;
  cfg.n_levels = 8;
  const auto f = spectrum_scan(ring(2.0), cfg, 128);
  EXPECT_NEAR(f.x_bias, 13.604, 1e-3);
  const auto minima = potential_minima(f, 0.5 * 2.0 * M_PI / f.Omega);
  ASSERT_EQ(minima.size(), 2u);
  EXPECT_NEAR(minima[0] + minima[1], 2.0 * f.x_bias, 0.05);
  const double spacing = (f.energies[2] + f.energies[3] - f.energies[0] - f.energies[1]) / 2.0;
  EXPECT_LT(f.energies[1] - f.energies[0], 0.1 * spacing);
  EXPECT_LT(f.energies[3] - f.energies[2], 0.1 * spacing);
}

TEST(Spectrum, SmallerHbarRaisesNothingButOmega) {
  SpectrumScanConfig cfg;
  cfg.hbar_scale = 0.25;
  cfg.n_levels = 4;
  const auto f0 = spectrum_scan(ring(2.0), SpectrumScanConfig{1.0, 4}, 128);
  const auto f = spectrum_scan(ring(2.0), cfg, 128);
  EXPECT_NEAR(f.Omega, 2.0 * f0.Omega, 1e-12);
  EXPECT_EQ(f.j_coeff, f0.j_coeff);
  EXPECT_NEAR(f.x_bias, 0.5 * f0.x_bias, 1e-12);
}

TEST(Spectrum, TooFewStatesWarn) {
  SpectrumScanConfig cfg;
  cfg.n_levels = 16;
  const auto f = spectrum_scan(ring(2.0), cfg, 32);
  EXPECT_FALSE(f.warnings.empty());
}

TEST(Spectrum, Schedules) {
  const auto s = geometric_schedule(0.99, 3);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_NEAR(s[1], 0.99, 1e-15);
  EXPECT_NEAR(s[2], 0.9801, 1e-15);
  EXPECT_EQ(geometric_schedule(0.99, 1).size(), 1u);
  EXPECT_EQ(frames_until(0.99, 2e-6), 1306u);
  EXPECT_THROW(geometric_schedule(1.5, 3), ConfigError);
}

TEST(Spectrum, Validation) {
  SpectrumScanConfig cfg;
  cfg.hbar_scale = 0.0;
  EXPECT_THROW(spectrum_scan(ring(2.0), cfg, 64), ConfigError);
  cfg.hbar_scale = 1.0;
  cfg.n_levels = 40;
  EXPECT_THROW(spectrum_scan(ring(2.0), cfg, 64), ConfigError);
}
