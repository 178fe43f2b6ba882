#pragma once

// Truncated number-basis operator algebra for the ring Hamiltonian
//
//   H'(tau) = p^2/2 + (x - x(tau))^2/2 - j cos(Omega x) + (zeta/2)(p x + x p)
//
// The basis may be displaced: with center c the basis states are D(c/sqrt 2)|n>,
// so the lowering operator reads a = a_0 + (c / sqrt 2) I where a_0 has the
// usual sqrt(n) superdiagonal. Every operator is the same physical operator in
// either frame; a displaced frame only concentrates the truncation where the
// state lives. c = 0 is the plain Fock basis.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "squidqct/circuit.hpp"
#include "squidqct/errors.hpp"

namespace squidqct {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using RSpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr std::size_t kMinBasisDim = 16;

struct BasisOptions {
  double center = 0.0;        // displacement of the basis along x
  double prune_tol = 1e-15;   // relative magnitude below which sparse copies drop entries
  bool include_damping = true;
};

/// Dense reference operators plus sparse copies used by the time steppers.
struct OperatorSet {
  std::size_t dim = 0;
  double center = 0.0;
  double Omega = 0.0;
  double j_coeff = 0.0;
  double zeta = 0.0;

  CMat a;
  CMat x;
  CMat p;
  CMat x2;
  CMat cos_Omega_x;
  CMat damping;
  CMat h_static;

  SpMat a_sparse;
  SpMat x_sparse;
  SpMat p_sparse;
  SpMat h_static_sparse;

  // Real and imaginary parts kept apart for the steppers: every operator here
  // is real except the damping term, so real-by-complex products halve the work.
  RSpMat h_re;
  RSpMat h_im;
  RSpMat x_re;
};

struct DriveSignal {
  double x_bias = 0.0;
  double x_amp = 0.0;
  double omega = 1.0;

  double displacement(double tau) const { return x_bias + x_amp * std::sin(omega * tau); }
};

inline DriveSignal make_drive(const DerivedParams& d) {
  if (!(d.omega > 0.0)) throw ConfigError("drive frequency must be positive");
  return {d.x_per_phi0 * d.phi_x, d.x_per_phi0 * d.phi_d, d.omega};
}

/// a_0: superdiagonal sqrt(n), i.e. a_0[n-1, n] = sqrt(n).
inline RMat lowering_matrix(std::size_t dim) {
  RMat a = RMat::Zero(dim, dim);
  for (std::size_t n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

/// cos(Omega (x + shift)) for real symmetric x via its eigendecomposition.
inline RMat cosine_of_symmetric(const RMat& x, double Omega, double shift = 0.0) {
  Eigen::SelfAdjointEigenSolver<RMat> es(x);
  if (es.info() != Eigen::Success) throw EigenSolverError("symmetric eigensolver failed in cosine_operator");
  const Eigen::VectorXd c = ((es.eigenvalues().array() + shift) * Omega).cos().matrix();
  return es.eigenvectors() * c.asDiagonal() * es.eigenvectors().transpose();
}

/// cos(Omega x) for a Hermitian x: cosine applied to the eigenvalues, rotated back.
inline CMat cosine_operator(const CMat& x, double Omega) {
  Eigen::SelfAdjointEigenSolver<CMat> es(x);
  if (es.info() != Eigen::Success) throw EigenSolverError("Hermitian eigensolver failed in cosine_operator");
  const Eigen::VectorXd c = (es.eigenvalues().array() * Omega).cos().matrix();
  CMat out = es.eigenvectors() * c.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  return 0.5 * (out + out.adjoint().eval());
}

inline SpMat to_sparse(const CMat& m, double rel_tol) {
  const double cutoff = m.cwiseAbs().maxCoeff() * rel_tol;
  std::vector<Eigen::Triplet<cplx>> trips;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (std::abs(m(r, c)) > cutoff) trips.emplace_back(r, c, m(r, c));
  SpMat s(m.rows(), m.cols());
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

inline RSpMat to_real_sparse(const RMat& m, double rel_tol) {
  const double scale = m.cwiseAbs().maxCoeff();
  RSpMat s(m.rows(), m.cols());
  if (scale == 0.0) return s;
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (std::abs(m(r, c)) > scale * rel_tol) trips.emplace_back(r, c, m(r, c));
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

inline OperatorSet build_operators(std::size_t dim, const DerivedParams& d, const BasisOptions& opt = {}) {
  if (dim < kMinBasisDim) throw ConfigError("basis dimension must be at least 16");
  if (!std::isfinite(opt.center)) throw ConfigError("basis center must be finite");

  OperatorSet ops;
  ops.dim = dim;
  ops.center = opt.center;
  ops.Omega = d.Omega;
  ops.j_coeff = d.j_coeff;
  ops.zeta = opt.include_damping ? d.zeta : 0.0;

  const cplx I(0.0, 1.0);
  const double s2 = std::sqrt(2.0);
  const RMat a0 = lowering_matrix(dim);
  const RMat x0 = (a0 + a0.transpose()) / s2;  // undisplaced x, real tridiagonal

  ops.a = a0.cast<cplx>();
  ops.a.diagonal().array() += opt.center / s2;
  ops.x = (ops.a + ops.a.adjoint()) / s2;
  ops.p = I * (ops.a.adjoint() - ops.a) / s2;
  ops.x2 = ops.x * ops.x;
  ops.cos_Omega_x = cosine_of_symmetric(x0, d.Omega, opt.center).cast<cplx>();
  ops.damping = 0.5 * ops.zeta * (ops.p * ops.x + ops.x * ops.p);
  ops.h_static = 0.5 * (ops.p * ops.p) + 0.5 * ops.x2 - d.j_coeff * ops.cos_Omega_x + ops.damping;

  ops.a_sparse = to_sparse(ops.a, opt.prune_tol);
  ops.x_sparse = to_sparse(ops.x, opt.prune_tol);
  ops.p_sparse = to_sparse(ops.p, opt.prune_tol);
  ops.h_static_sparse = to_sparse(ops.h_static, opt.prune_tol);
  const double h_scale = ops.h_static.cwiseAbs().maxCoeff();
  const double im_tol = opt.prune_tol * h_scale / std::max(ops.h_static.imag().cwiseAbs().maxCoeff(), 1e-300);
  ops.h_re = to_real_sparse(ops.h_static.real(), opt.prune_tol);
  ops.h_im = to_real_sparse(ops.h_static.imag(), im_tol);
  ops.x_re = to_real_sparse(ops.x.real(), opt.prune_tol);
  return ops;
}

/// Dense H'(tau) with x(tau) = x_bias + x_amp sin(omega tau); the c-number
/// x(tau)^2 / 2 is kept.
inline CMat hamiltonian_at(const OperatorSet& ops, const DriveSignal& drive, double tau) {
  const double xt = drive.displacement(tau);
  CMat h = ops.h_static - xt * ops.x;
  h.diagonal().array() += 0.5 * xt * xt;
  return h;
}

// ---------------------------------------------------------------------------
// Operator application used by the steppers. Anything with an overload of
// apply(op, in, out) can serve as a Hamiltonian.

inline void apply(const CMat& m, const CVec& in, CVec& out) { out.noalias() = m * in; }
inline void apply(const SpMat& m, const CVec& in, CVec& out) { out.noalias() = m * in; }

struct ZeroOperator {};
inline void apply(const ZeroOperator&, const CVec& in, CVec& out) { out.setZero(in.size()); }

/// H'(tau) frozen at one instant without materializing a matrix.
struct DrivenHamiltonian {
  const RSpMat* h_re = nullptr;
  const RSpMat* h_im = nullptr;
  const RSpMat* x = nullptr;
  double shift = 0.0;     // x(tau)
  double constant = 0.0;  // x(tau)^2 / 2
};

inline DrivenHamiltonian driven_hamiltonian(const OperatorSet& ops, const DriveSignal& drive, double tau) {
  const double xt = drive.displacement(tau);
  return {&ops.h_re, &ops.h_im, &ops.x_re, xt, 0.5 * xt * xt};
}

namespace detail {
inline cplx row_dot(const RSpMat& m, Eigen::Index r, const cplx* in) {
  const int* idx = m.innerIndexPtr();
  const double* val = m.valuePtr();
  double re = 0.0, im = 0.0;
  for (int k = m.outerIndexPtr()[r]; k < m.outerIndexPtr()[r + 1]; ++k) {
    re += val[k] * in[idx[k]].real();
    im += val[k] * in[idx[k]].imag();
  }
  return {re, im};
}
}  // namespace detail

inline void apply(const DrivenHamiltonian& h, const CVec& in, CVec& out) {
  out.resize(in.size());
  const cplx* v = in.data();
  for (Eigen::Index r = 0; r < in.size(); ++r) {
    const cplx re = detail::row_dot(*h.h_re, r, v) - h.shift * detail::row_dot(*h.x, r, v) + h.constant * v[r];
    const cplx im = detail::row_dot(*h.h_im, r, v);
    out(r) = re + cplx(0.0, 1.0) * im;
  }
}

/// Gershgorin bound on the spectral radius (max absolute row sum).
inline double row_sum_bound(const SpMat& m) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double s = 0.0;
    for (SpMat::InnerIterator it(m, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

/// Upper bound on ||H'(tau)|| over a drive period.
inline double hamiltonian_norm_bound(const OperatorSet& ops, const DriveSignal& drive) {
  double best = 0.0;
  for (double xt : {drive.x_bias - std::abs(drive.x_amp), drive.x_bias + std::abs(drive.x_amp)}) {
    SpMat shift(ops.dim, ops.dim);
    shift.setIdentity();
    SpMat h = ops.h_static_sparse - xt * ops.x_sparse + (0.5 * xt * xt) * shift;
    best = std::max(best, row_sum_bound(h));
  }
  return best;
}

}  // namespace squidqct
