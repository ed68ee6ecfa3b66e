// Rank-revealing least-squares solver for the collocation systems.
//
// Recipe: equilibrate columns to unit 2-norm, factor with pivoted QR,
// truncate the numerical rank at rtol times the leading R diagonal, and
// polish with a few refinement sweeps whose residuals are accumulated in
// extended precision. Row scaling and column dropping both degrade the
// solutions of these systems; only column equilibration is safe.

#pragma once

#include <complex>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#define lapack_complex_float_real(z) ((z).real())
#define lapack_complex_float_imag(z) ((z).imag())
#define lapack_complex_double_real(z) ((z).real())
#define lapack_complex_double_imag(z) ((z).imag())
#include <lapacke.h>

#include <vector>

#include "gratstat/core.hpp"

namespace gratstat {

struct LsqSolution {
  VectorXcd x;         // coefficients in the original column basis
  VectorXcd y_eq;      // coefficients in the equilibrated basis, x = y_eq / col_norms
  VectorXd col_norms;  // equilibration scales (zero columns get scale 1)
  int rank = 0;
  Real cond = 0.0;  // leading over trailing kept R diagonal
};

namespace detail {

// Pivoted QR factors of the equilibrated matrix, reusable across solves.
struct QrFactors {
  MatrixXcd qr;  // zgeqp3 output: R in the upper triangle, reflectors below
  std::vector<Complex> tau;
  std::vector<lapack_int> jpvt;  // 1-based column permutation
  int rank = 0;
  Real cond = 0.0;

  // Minimum-norm-style basic solution using the kept leading block.
  VectorXcd solve(VectorXcd b) const {
    const auto m = static_cast<lapack_int>(qr.rows());
    const auto n = static_cast<lapack_int>(qr.cols());
    lapack_int info = LAPACKE_zunmqr(LAPACK_COL_MAJOR, 'L', 'C', m, 1, n,
                                     qr.data(), m, tau.data(), b.data(), m);
    if (info != 0) throw NumericalError("lsq: applying Q failed");
    info = LAPACKE_ztrtrs(LAPACK_COL_MAJOR, 'U', 'N', 'N', rank, 1, qr.data(), m,
                          b.data(), m);
    if (info != 0) throw NumericalError("lsq: triangular solve failed");
    VectorXcd out = VectorXcd::Zero(n);
    for (int i = 0; i < rank; ++i) out[jpvt[i] - 1] = b[i];
    return out;
  }
};

inline QrFactors factor_pivoted_qr(const MatrixXcd &Aeq, Real rtol) {
  QrFactors f;
  f.qr = Aeq;
  const auto m = static_cast<lapack_int>(Aeq.rows());
  const auto n = static_cast<lapack_int>(Aeq.cols());
  if (m < n) throw NumericalError("lsq: system must not be underdetermined");
  f.tau.resize(static_cast<size_t>(n));
  f.jpvt.assign(static_cast<size_t>(n), 0);
  const lapack_int info = LAPACKE_zgeqp3(LAPACK_COL_MAJOR, m, n, f.qr.data(), m,
                                         f.jpvt.data(), f.tau.data());
  if (info != 0) throw NumericalError("lsq: pivoted QR failed");
  const Real d0 = std::abs(f.qr(0, 0));
  if (d0 == 0.0) throw NumericalError("lsq: zero matrix");
  f.rank = 0;
  Real dr = d0;
  for (int i = 0; i < n; ++i) {
    const Real di = std::abs(f.qr(i, i));
    if (di > rtol * d0) {
      f.rank = i + 1;
      dr = di;
    } else {
      break;
    }
  }
  f.cond = d0 / dr;
  return f;
}

}  // namespace detail

// Residual b - A y with entries widened to extended precision per term.
inline VectorXcd residual_extended(const MatrixXcd &A, const VectorXcd &y,
                                   const VectorXcd &b) {
  const auto m = A.rows();
  const auto n = A.cols();
  VectorXcd r(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    LComplex acc(b[i].real(), b[i].imag());
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex a = A(i, j);
      acc -= LComplex(a.real(), a.imag()) * LComplex(y[j].real(), y[j].imag());
    }
    r[i] = Complex(static_cast<Real>(acc.real()), static_cast<Real>(acc.imag()));
  }
  return r;
}

// Solve min ||A x - b|| with column equilibration, rank-revealing pivoted QR,
// and `refine` extended-precision refinement sweeps.
inline LsqSolution equilibrated_qr_solve(const MatrixXcd &A, const VectorXcd &b,
                                         Real rtol = 1e-12, int refine = 3) {
  const auto n = A.cols();
  LsqSolution sol;
  sol.col_norms = VectorXd(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Real cn = A.col(j).norm();
    sol.col_norms[j] = cn > 0.0 ? cn : 1.0;
  }
  MatrixXcd Aeq = A;
  for (Eigen::Index j = 0; j < n; ++j) Aeq.col(j) /= sol.col_norms[j];

  const auto f = detail::factor_pivoted_qr(Aeq, rtol);
  sol.rank = f.rank;
  sol.cond = f.cond;
  VectorXcd y = f.solve(b);
  for (int sweep = 0; sweep < refine; ++sweep) {
    y += f.solve(residual_extended(Aeq, y, b));
  }
  sol.y_eq = y;
  sol.x = y.cwiseQuotient(sol.col_norms.cast<Complex>());
  return sol;
}

}  // namespace gratstat
