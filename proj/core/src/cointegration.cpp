#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "topictrend/error.hpp"
#include "topictrend/linalg.hpp"
#include "topictrend/multivar.hpp"
#include "topictrend/trend_series.hpp"

namespace topictrend::multivar {

namespace {

// Trace critical values indexed by k - r (1-based), as {5%, 1%}.
constexpr std::array<std::array<double, 2>, 11> kOsterwaldLenumConstant{{
    {3.76, 6.65},
    {15.41, 20.04},
    {29.68, 35.65},
    {47.21, 54.46},
    {68.52, 76.07},
    {94.15, 103.18},
    {124.24, 133.57},
    {156.00, 168.36},
    {192.89, 204.95},
    {233.13, 247.18},
    {277.71, 293.44},
}};

// MacKinnon-Haug-Michelis trace table without deterministic terms, {90%, 95%, 99%}.
constexpr std::array<std::array<double, 3>, 12> kMhmNone{{
    {2.9762, 4.1296, 6.9406},
    {10.4741, 12.3212, 16.3640},
    {21.7781, 24.2761, 29.5147},
    {37.0339, 40.1749, 46.5716},
    {56.2839, 60.0627, 67.6367},
    {79.5329, 83.9383, 92.7136},
    {106.7351, 111.7797, 121.7375},
    {137.9954, 143.6691, 154.7977},
    {173.2292, 179.5199, 191.8122},
    {212.4721, 219.4051, 232.8291},
    {255.6732, 263.2603, 277.9962},
    {302.9054, 311.1288, 326.9716},
}};

// Davidson-MacKinnon residual-based critical values with a constant,
// {1%, 5%, 10%} for 2..6 variables.
constexpr std::array<std::array<double, 3>, 5> kEngleGranger{{
    {-3.90, -3.34, -3.04},
    {-4.29, -3.74, -3.45},
    {-4.64, -4.10, -3.81},
    {-4.96, -4.42, -4.13},
    {-5.25, -4.71, -4.42},
}};

struct JohansenCore {
  int T = 0;  // effective sample
  MatrixXd dy;  // Z0
  MatrixXd ylag;  // Z1
  MatrixXd z2;  // lagged differences and constant
  MatrixXd s00, s01, s11;
  VectorXd eigenvalues;   // descending
  MatrixXd eigenvectors;  // columns, v' S11 v = 1
};

MatrixXd residualize(const MatrixXd& y, const MatrixXd& x) {
  if (x.cols() == 0) return y;
  return linalg::ols(x, y).residuals;
}

JohansenCore johansen_core(const Series& s, int p, DetSpec det) {
  const int T = s.length(), k = s.dims();
  if (k < 2) throw ValidationError("cointegration needs at least two variables");
  if (p < 1) throw ValidationError("cointegration: the levels VAR needs at least one lag");
  const int n = T - p;
  const int z2cols = k * (p - 1) + (det == DetSpec::Constant ? 1 : 0);
  if (n <= z2cols + k + 1) throw ValidationError("cointegration: series too short for the lag length");
  JohansenCore c;
  c.T = n;
  c.dy.resize(n, k);
  c.ylag.resize(n, k);
  c.z2.resize(n, z2cols);
  for (int r = 0; r < n; ++r) {
    const int t = p + r;
    c.dy.row(r) = s.data.row(t) - s.data.row(t - 1);
    c.ylag.row(r) = s.data.row(t - 1);
    for (int i = 1; i < p; ++i) c.z2.block(r, (i - 1) * k, 1, k) = s.data.row(t - i) - s.data.row(t - i - 1);
    if (det == DetSpec::Constant) c.z2(r, z2cols - 1) = 1.0;
  }
  const MatrixXd r0 = residualize(c.dy, c.z2);
  const MatrixXd r1 = residualize(c.ylag, c.z2);
  c.s00 = r0.transpose() * r0 / n;
  c.s01 = r0.transpose() * r1 / n;
  c.s11 = r1.transpose() * r1 / n;
  const MatrixXd l = linalg::cholesky_lower(c.s11);
  const MatrixXd s00_inv_s01 = c.s00.ldlt().solve(c.s01);
  const MatrixXd l_inv = l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(k, k));
  MatrixXd m = l_inv * (c.s01.transpose() * s00_inv_s01) * l_inv.transpose();
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("Johansen eigenproblem failed");
  c.eigenvalues = es.eigenvalues().reverse();
  c.eigenvectors = l_inv.transpose() * es.eigenvectors().rowwise().reverse();
  for (Eigen::Index i = 0; i < k; ++i) c.eigenvalues(i) = std::clamp(c.eigenvalues(i), 0.0, 1.0 - 1e-15);
  return c;
}

double johansen_log_likelihood(const JohansenCore& c, int r) {
  const auto k = static_cast<double>(c.s00.rows());
  double ll = k * (1.0 + std::log(2.0 * M_PI)) + linalg::log_det_spd(c.s00);
  for (int i = 0; i < r; ++i) ll += std::log(1.0 - c.eigenvalues(i));
  return -0.5 * c.T * ll;
}

}  // namespace

std::string to_string(DetSpec d) { return d == DetSpec::None ? "none" : "constant"; }

std::optional<std::pair<double, double>> johansen_trace_critical(int k_minus_r, DetSpec det) {
  if (k_minus_r < 1) return std::nullopt;
  const auto i = static_cast<std::size_t>(k_minus_r - 1);
  if (det == DetSpec::Constant) {
    if (i >= kOsterwaldLenumConstant.size()) return std::nullopt;
    return std::make_pair(kOsterwaldLenumConstant[i][0], kOsterwaldLenumConstant[i][1]);
  }
  if (i >= kMhmNone.size()) return std::nullopt;
  return std::make_pair(kMhmNone[i][1], kMhmNone[i][2]);
}

EgCritical engle_granger_critical(int num_variables) {
  if (num_variables < 2 || num_variables > 6)
    throw ValidationError(fmt::format("Engle-Granger critical values cover 2..6 variables, got {}", num_variables));
  const auto& row = kEngleGranger[static_cast<std::size_t>(num_variables - 2)];
  return {row[0], row[1], row[2]};
}

CointegrationReport cointegration(const Series& s, CointMethod method, int lags, DetSpec det) {
  CointegrationReport rep;
  rep.method = method;
  rep.det = det;
  rep.lags = lags;
  const int k = s.dims();
  if (k < 2) throw ValidationError("cointegration needs at least two variables");

  if (method == CointMethod::EngleGranger) {
    const int T = s.length();
    MatrixXd x(T, k);
    x.col(0).setOnes();
    x.rightCols(k - 1) = s.data.rightCols(k - 1);
    const auto f = linalg::ols(x, s.data.col(0));
    EngleGrangerResult eg;
    eg.first_stage = f.coef.col(0);
    const double s2 = f.residuals.squaredNorm() / (T - k);
    eg.first_stage_std_errors = (s2 * f.xtx_inv.diagonal()).cwiseSqrt();
    const double tss = (s.data.col(0).array() - s.data.col(0).mean()).square().sum();
    eg.r2 = 1.0 - f.residuals.squaredNorm() / tss;
    eg.lag = lags;
    const std::vector<double> u(f.residuals.data(), f.residuals.data() + T);
    eg.statistic = trend::unit_root_test(u, trend::UnitRootTest::ADF, trend::ModelType::Type1, lags).regression_t;
    const auto cv = engle_granger_critical(k);
    eg.crit_1 = cv.one;
    eg.crit_5 = cv.five;
    eg.crit_10 = cv.ten;
    rep.effective_sample = T - 1 - lags;
    rep.engle_granger = eg;
    rep.critical_value_source = "Davidson and MacKinnon (1993), cointegrating regression with constant";
    return rep;
  }

  const JohansenCore c = johansen_core(s, lags, det);
  rep.effective_sample = c.T;
  const int base = k * k * (lags - 1) + (det == DetSpec::Constant ? k : 0);
  for (int r = 0; r <= k; ++r) {
    JohansenRow row;
    row.rank = r;
    row.parameters = base + r * (2 * k - r);
    row.log_likelihood = johansen_log_likelihood(c, r);
    if (r > 0) row.eigenvalue = c.eigenvalues(r - 1);
    if (r < k) {
      double tr = 0.0;
      for (int i = r; i < k; ++i) tr -= c.T * std::log(1.0 - c.eigenvalues(i));
      row.trace = tr;
      if (auto cv = johansen_trace_critical(k - r, det)) {
        row.crit_5 = cv->first;
        row.crit_1 = cv->second;
      }
    }
    rep.johansen.push_back(row);
  }
  for (const auto& row : rep.johansen) {
    if (!row.trace) {
      rep.selected_rank = row.rank;
      break;
    }
    if (!row.crit_5) break;
    if (*row.trace < *row.crit_5) {
      rep.selected_rank = row.rank;
      break;
    }
  }
  rep.critical_value_source = det == DetSpec::Constant
                                  ? "Osterwald-Lenum (1992), unrestricted constant"
                                  : "MacKinnon, Haug and Michelis (1999), no deterministic terms";
  return rep;
}

int VecmModel::unit_root_count(double tol) const {
  return static_cast<int>(std::count_if(eigenvalues.begin(), eigenvalues.end(),
                                        [&](const EigenRow& e) { return std::abs(e.modulus - 1.0) <= tol; }));
}

VecmModel fit_vecm(const Series& s, int p, int rank, DetSpec det) {
  const int k = s.dims();
  if (rank < 0 || rank >= k) throw ValidationError(fmt::format("VECM rank {} outside [0, {})", rank, k));
  const JohansenCore c = johansen_core(s, p, det);
  VecmModel v;
  v.p = p;
  v.k = k;
  v.rank = rank;
  v.det = det;
  v.names = s.names;
  v.johansen_eigenvalues.assign(c.eigenvalues.data(), c.eigenvalues.data() + k);

  MatrixXd pi = MatrixXd::Zero(k, k);
  if (rank > 0) {
    MatrixXd b = c.eigenvectors.leftCols(rank);
    const MatrixXd top = b.topRows(rank);
    Eigen::FullPivLU<MatrixXd> lu(top);
    if (!lu.isInvertible()) throw NumericalError("VECM: cointegrating vectors cannot be normalized on the leading variables");
    b = b * lu.inverse();
    v.beta = b;
    v.alpha = c.s01 * b * (b.transpose() * c.s11 * b).inverse();
    pi = v.alpha * b.transpose();
  } else {
    v.alpha = MatrixXd::Zero(k, 0);
    v.beta = MatrixXd::Zero(k, 0);
  }

  // Short-run terms by least squares given the error-correction term.
  const MatrixXd target = c.dy - c.ylag * pi.transpose();
  MatrixXd resid = target;
  v.intercept = VectorXd::Zero(k);
  if (c.z2.cols() > 0) {
    const auto f = linalg::ols(c.z2, target);
    resid = f.residuals;
    for (int i = 1; i < p; ++i) v.gamma.push_back(f.coef.block((i - 1) * k, 0, k, k).transpose());
    if (det == DetSpec::Constant) v.intercept = f.coef.row(c.z2.cols() - 1).transpose();
  }
  v.residuals = resid;
  v.sigma_u = resid.transpose() * resid / c.T;
  v.log_likelihood = johansen_log_likelihood(c, rank);

  const MatrixXd I = MatrixXd::Identity(k, k);
  v.level_coefs.resize(static_cast<std::size_t>(p));
  v.level_coefs[0] = I + pi + (p > 1 ? v.gamma[0] : MatrixXd::Zero(k, k));
  for (int i = 2; i <= p; ++i) {
    const MatrixXd gi = i < p ? v.gamma[static_cast<std::size_t>(i - 1)] : MatrixXd::Zero(k, k);
    v.level_coefs[static_cast<std::size_t>(i - 1)] = gi - v.gamma[static_cast<std::size_t>(i - 2)];
  }
  v.eigenvalues = companion_eigenvalues(v.level_coefs);
  return v;
}

}  // namespace topictrend::multivar
