#include "topictrend/linalg.hpp"

#include <cmath>

#include "topictrend/error.hpp"

namespace topictrend::linalg {

namespace {

constexpr double kRankTolerance = 1e-10;

Eigen::ColPivHouseholderQR<MatrixXd> factor(const MatrixXd& x) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
  qr.setThreshold(kRankTolerance);
  return qr;
}

}  // namespace

int rank(const MatrixXd& x) {
  if (x.cols() == 0) return 0;
  return static_cast<int>(factor(x).rank());
}

OlsFit ols(const MatrixXd& x, const MatrixXd& y) {
  if (x.rows() != y.rows()) throw ValidationError("ols: row mismatch between design and response");
  const auto p = x.cols();
  OlsFit fit;
  fit.n = static_cast<int>(x.rows());
  fit.p = static_cast<int>(p);
  if (p == 0) {
    fit.coef = MatrixXd::Zero(0, y.cols());
    fit.residuals = y;
    fit.xtx_inv = MatrixXd::Zero(0, 0);
    return fit;
  }
  auto qr = factor(x);
  if (qr.rank() < p) throw NumericalError("ols: design matrix is rank deficient");
  fit.coef = qr.solve(y);
  fit.residuals = y - x * fit.coef;
  // (X'X)^-1 = P R^-1 R^-T P'
  MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  MatrixXd r_inv = r.template triangularView<Eigen::Upper>().solve(MatrixXd::Identity(p, p));
  MatrixXd inner = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  fit.xtx_inv = perm * inner * perm.transpose();
  return fit;
}

MatrixXd normal_equations(const MatrixXd& x, const MatrixXd& y) {
  MatrixXd xtx = x.transpose() * x;
  MatrixXd xty = x.transpose() * y;
  Eigen::LDLT<MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success) throw NumericalError("normal_equations: factorization failed");
  return ldlt.solve(xty);
}

MatrixXd spd_inverse(const MatrixXd& a) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("spd_inverse: matrix not positive definite");
  return llt.solve(MatrixXd::Identity(a.rows(), a.cols()));
}

double log_det_spd(const MatrixXd& a) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("log_det_spd: matrix not positive definite");
  const MatrixXd& l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

MatrixXd cholesky_lower(const MatrixXd& a) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("cholesky: matrix not positive definite");
  return llt.matrixL();
}

}  // namespace topictrend::linalg
