#pragma once

// Static spectrum of the ring as hbar is scaled by s (hbar -> s hbar) while
// every circuit parameter stays fixed. Only quantities with an explicit hbar in
// the dimensionless Hamiltonian move: Omega -> Omega / sqrt(s). The Josephson
// coefficient I_c / (2 e omega0) and the bias in flux quanta are held fixed, so
// the bias sits at x_bias(s) = (2 pi / Omega(s)) phi_x.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/errors.hpp"
#include "squidqct/hilbert.hpp"

namespace squidqct {

struct SpectrumScanConfig {
  double hbar_scale = 1.0;
  std::size_t n_levels = 16;
  double density_threshold = 0.05;
  std::size_t grid_points = 2048;
};

struct LevelExtent {
  double x_lo = std::numeric_limits<double>::quiet_NaN();
  double x_hi = std::numeric_limits<double>::quiet_NaN();
};

struct SpectrumFrame {
  double hbar_scale = 1.0;
  double Omega = 0.0;
  double j_coeff = 0.0;
  double x_bias = 0.0;
  std::vector<double> grid;
  std::vector<double> potential;
  std::vector<double> energies;
  std::vector<LevelExtent> extents;
  std::vector<std::string> warnings;
};

inline void validate(const SpectrumScanConfig& cfg, std::size_t dim) {
  if (!(cfg.hbar_scale > 0.0 && cfg.hbar_scale <= 1.0)) throw ConfigError("hbar scale must lie in (0, 1]");
  if (cfg.n_levels == 0) throw ConfigError("n_levels must be positive");
  if (cfg.n_levels > dim / 2) throw ConfigError("n_levels must not exceed half the basis dimension");
  if (!(cfg.density_threshold > 0.0)) throw ConfigError("density threshold must be positive");
  if (cfg.grid_points < 2) throw ConfigError("grid needs at least two points");
}

/// Normalized Hermite functions h_0..h_{n-1} at y, with a running rescale so
/// that large |y| and large n do not underflow.
inline void hermite_functions(double y, std::size_t n, double* out) {
  const double pi_quarter = std::pow(std::numbers::pi, -0.25);
  double log_scale = -0.5 * y * y;
  double prev = 0.0, cur = pi_quarter;
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = cur * std::exp(log_scale);
    const double next = std::sqrt(2.0 / static_cast<double>(k + 1)) * y * cur -
                        std::sqrt(static_cast<double>(k) / static_cast<double>(k + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > 1e150) {
      cur *= 1e-150;
      prev *= 1e-150;
      log_scale += 150.0 * std::log(10.0);
    }
  }
}

/// V(x) = (x - x_bias)^2 / 2 - j cos(Omega x).
inline double ring_potential(double x, double x_bias, double j_coeff, double Omega) {
  const double y = x - x_bias;
  return 0.5 * y * y - j_coeff * std::cos(Omega * x);
}

inline SpectrumFrame spectrum_scan(const CircuitParams& params, const SpectrumScanConfig& cfg, std::size_t dim,
                                   const PhysicalConstants& k = PhysicalConstants::codata2018()) {
  validate(cfg, dim);
  DerivedParams d = derive(params, k);
  SpectrumFrame f;
  f.hbar_scale = cfg.hbar_scale;
  f.Omega = d.Omega / std::sqrt(cfg.hbar_scale);
  f.j_coeff = d.j_coeff;
  f.x_bias = 2.0 * std::numbers::pi / f.Omega * d.phi_x;

  DerivedParams ds = d;
  ds.Omega = f.Omega;
  ds.x_per_phi0 = 2.0 * std::numbers::pi / f.Omega;
  ds.phi_d = 0.0;
  BasisOptions opt;
  opt.center = f.x_bias;
  opt.include_damping = false;
  const OperatorSet ops = build_operators(dim, ds, opt);
  const DriveSignal still{f.x_bias, 0.0, 1.0};
  const RMat h = hamiltonian_at(ops, still, 0.0).real();

  Eigen::SelfAdjointEigenSolver<RMat> es(h);
  if (es.info() != Eigen::Success) throw EigenSolverError("spectrum eigensolver failed");
  const auto n_lev = static_cast<Eigen::Index>(cfg.n_levels);
  f.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + n_lev);

  const double e_top = f.energies.back();
  if (e_top + f.j_coeff > 0.5 * static_cast<double>(dim))
    f.warnings.push_back("highest requested level " + std::to_string(e_top) +
                         " reaches beyond the lowest half of the truncated spectrum");

  // Outermost classical turning point of the top level, relative to the bias.
  const double r_bound = std::sqrt(2.0 * std::max(0.0, e_top + f.j_coeff)) + 1.0;
  double r_turn = 0.0;
  const int probe = 8192;
  for (int i = 0; i <= probe; ++i) {
    const double y = -r_bound + 2.0 * r_bound * i / probe;
    if (ring_potential(f.x_bias + y, f.x_bias, f.j_coeff, f.Omega) <= e_top) r_turn = std::max(r_turn, std::abs(y));
  }
  if (r_turn == 0.0) r_turn = 1.0;

  const double half = 1.2 * r_turn;
  const std::size_t g = cfg.grid_points;
  f.grid.resize(g);
  f.potential.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    f.grid[i] = f.x_bias - half + 2.0 * half * static_cast<double>(i) / static_cast<double>(g - 1);
    f.potential[i] = ring_potential(f.grid[i], f.x_bias, f.j_coeff, f.Omega);
  }

  // Position-space wavefunctions on the grid: Psi = Hermite(grid) * eigenvectors.
  RMat herm(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(dim));
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < g; ++i) {
    hermite_functions(f.grid[i] - f.x_bias, dim, row.data());
    for (std::size_t n = 0; n < dim; ++n) herm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = row[n];
  }
  const RMat psi = herm * es.eigenvectors().leftCols(n_lev);
  f.extents.resize(cfg.n_levels);
  for (Eigen::Index lvl = 0; lvl < n_lev; ++lvl) {
    LevelExtent e;
    for (std::size_t i = 0; i < g; ++i) {
      const double dens = psi(static_cast<Eigen::Index>(i), lvl) * psi(static_cast<Eigen::Index>(i), lvl);
      if (dens > cfg.density_threshold) {
        if (std::isnan(e.x_lo)) e.x_lo = f.grid[i];
        e.x_hi = f.grid[i];
      }
    }
    f.extents[static_cast<std::size_t>(lvl)] = e;
  }
  return f;
}

/// Strict local minima of the sampled potential with |x - x_bias| <= half_width.
inline std::vector<double> potential_minima(const SpectrumFrame& f, double half_width) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < f.potential.size(); ++i)
    if (f.potential[i] < f.potential[i - 1] && f.potential[i] < f.potential[i + 1] &&
        std::abs(f.grid[i] - f.x_bias) <= half_width)
      out.push_back(f.grid[i]);
  return out;
}

/// s_k = ratio^k for k = 0 .. n_frames-1.
inline std::vector<double> geometric_schedule(double ratio, std::size_t n_frames) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("schedule ratio must lie in (0, 1]");
  std::vector<double> s(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) s[i] = std::pow(ratio, static_cast<double>(i));
  return s;
}

/// Frames needed for ratio^k to first reach s_end: floor(ln s_end / ln ratio) + 1.
inline std::size_t frames_until(double ratio, double s_end) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("schedule ratio must lie in (0, 1)");
  if (!(s_end > 0.0 && s_end <= 1.0)) throw ConfigError("final scale must lie in (0, 1]");
  return static_cast<std::size_t>(std::floor(std::log(s_end) / std::log(ratio))) + 1;
}

}  // namespace squidqct
