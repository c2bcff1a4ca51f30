#pragma once

#include <Eigen/Dense>

namespace topictrend::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct OlsFit {
  MatrixXd coef;       // p x m (one column per response)
  MatrixXd residuals;  // n x m
  MatrixXd xtx_inv;    // p x p
  int n = 0;
  int p = 0;
};

/// Least squares of every column of `y` on `x` via column-pivoted QR.
/// Throws NumericalError when `x` is rank deficient.
OlsFit ols(const MatrixXd& x, const MatrixXd& y);

/// Solve (x'x) b = x'y through the normal equations with an LDLT
/// factorization. Kept separate from `ols` so tests can use it as an
/// independent route.
MatrixXd normal_equations(const MatrixXd& x, const MatrixXd& y);

/// Numerical rank using the same threshold `ols` applies.
int rank(const MatrixXd& x);

/// Symmetric positive (semi-)definite inverse via LDLT; throws on
/// singular input.
MatrixXd spd_inverse(const MatrixXd& a);

/// log|A| for symmetric positive definite A.
double log_det_spd(const MatrixXd& a);

/// Lower-triangular Cholesky factor; throws NumericalError when `a` is
/// not positive definite.
MatrixXd cholesky_lower(const MatrixXd& a);

}  // namespace topictrend::linalg
