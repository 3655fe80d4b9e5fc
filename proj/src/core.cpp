#include "oed/core.hpp"

#include <cmath>

namespace oed {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw input_error("SymMatrix: matrix must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw input_error("SymMatrix: non-finite entries");
  }
  m_ = 0.5 * (m + m.transpose());
}

EigenDecomp sym_eig(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric);
  if (es.info() != Eigen::Success) {
    throw singular_error("sym_eig: eigensolver failed to converge");
  }
  // SelfAdjointEigenSolver already sorts ascending.
  return EigenDecomp{es.eigenvalues(), es.eigenvectors()};
}

EigenDecomp sym_eig(const SymMatrix& s) { return sym_eig(s.mat()); }

Matrix psd_power(const EigenDecomp& eig, double q, double floor) {
  const Eigen::Index p = eig.dim();
  const double lmax = eig.eigenvalues(p - 1);
  const double neg_tol = -1e-10 * std::max(1.0, std::abs(lmax));
  Vector powered(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    double lam = eig.eigenvalues(i);
    if (lam < neg_tol) {
      throw input_error("psd_power: matrix has a significantly negative eigenvalue");
    }
    lam = std::max(lam, std::max(0.0, floor));
    if (lam == 0.0) {
      if (q < 0.0) {
        throw singular_error("psd_power: negative power of a singular matrix");
      }
      powered(i) = (q == 0.0) ? 1.0 : 0.0;
    } else {
      powered(i) = std::pow(lam, q);
    }
  }
  return eig.eigenvectors * powered.asDiagonal() * eig.eigenvectors.transpose();
}

SymMatrix psd_power(const SymMatrix& s, double q, double floor) {
  return SymMatrix(psd_power(sym_eig(s), q, floor));
}

double lambda_min(const Matrix& symmetric) {
  return sym_eig(symmetric).eigenvalues(0);
}

double lambda_min(const SymMatrix& s) { return lambda_min(s.mat()); }

}  // namespace oed
