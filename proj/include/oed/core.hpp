#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace oed {

// Error taxonomy used across the library.  The CLI maps input_error to
// exit code 1 and config_error / infeasible_error to exit code 2.
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct singular_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Row-major storage so rows feed the kernels directly.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense real symmetric matrix.  Symmetrized at construction; entries must
/// be finite.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);
  static SymMatrix identity(Eigen::Index p) {
    return SymMatrix(Matrix::Identity(p, p));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }

 private:
  Matrix m_;
};

/// Eigendecomposition with eigenvalues sorted ascending and orthonormal
/// eigenvector columns.
struct EigenDecomp {
  Vector eigenvalues;
  Matrix eigenvectors;

  Eigen::Index dim() const { return eigenvalues.size(); }
  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() *
           eigenvectors.transpose();
  }
};

EigenDecomp sym_eig(const SymMatrix& s);
EigenDecomp sym_eig(const Matrix& symmetric);

// S^q through the eigenbasis, eigenvalues clipped below at `floor`.
// Eigenvalues in [-1e-10*lambda_max, 0) are treated as 0; more negative
// values are rejected.  q < 0 with a zero post-clip eigenvalue throws
// singular_error.
SymMatrix psd_power(const SymMatrix& s, double q, double floor = 0.0);
Matrix psd_power(const EigenDecomp& eig, double q, double floor = 0.0);

double lambda_min(const SymMatrix& s);
double lambda_min(const Matrix& symmetric);

}  // namespace oed
