#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "topictrend/error.hpp"
#include "topictrend/linalg.hpp"
#include "topictrend/multivar.hpp"
#include "topictrend/stats.hpp"

namespace topictrend::multivar {

Series make_series(MatrixXd data, std::vector<std::string> names) {
  if (data.cols() < 1) throw ValidationError("series needs at least one variable");
  if (!data.allFinite()) throw ValidationError("series contains non-finite values");
  if (names.empty())
    for (Eigen::Index c = 0; c < data.cols(); ++c) names.push_back(fmt::format("y{}", c + 1));
  if (static_cast<Eigen::Index>(names.size()) != data.cols())
    throw ValidationError("series: one name per column required");
  return {std::move(data), std::move(names)};
}

MatrixXd VarModel::companion() const {
  const int kp = k * p;
  MatrixXd c = MatrixXd::Zero(kp, kp);
  for (int i = 0; i < p; ++i) c.block(0, i * k, k, k) = coefs[static_cast<std::size_t>(i)];
  if (p > 1) c.block(k, 0, k * (p - 1), k * (p - 1)).setIdentity();
  return c;
}

std::vector<EigenRow> companion_eigenvalues(const std::vector<MatrixXd>& coefs) {
  if (coefs.empty()) return {};
  const auto k = coefs.front().rows();
  const auto p = static_cast<Eigen::Index>(coefs.size());
  MatrixXd c = MatrixXd::Zero(k * p, k * p);
  for (Eigen::Index i = 0; i < p; ++i) c.block(0, i * k, k, k) = coefs[static_cast<std::size_t>(i)];
  if (p > 1) c.block(k, 0, k * (p - 1), k * (p - 1)).setIdentity();
  Eigen::EigenSolver<MatrixXd> es(c, false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigenvalues did not converge");
  std::vector<EigenRow> rows;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto z = es.eigenvalues()(i);
    rows.push_back({z.real(), z.imag(), std::abs(z)});
  }
  std::sort(rows.begin(), rows.end(), [](const EigenRow& a, const EigenRow& b) {
    if (a.modulus != b.modulus) return a.modulus > b.modulus;
    if (a.real != b.real) return a.real > b.real;
    return a.imag > b.imag;
  });
  return rows;
}

VarModel fit_var_sample(const Series& series, int p, int first_row) {
  const int T = series.length(), k = series.dims();
  if (p < 0) throw ValidationError("VAR lag order must be non-negative");
  if (first_row < p) throw ValidationError("VAR sample starts before the lags are available");
  const int n = T - first_row;
  const int m = 1 + k * p;
  if (n <= k * p + 1)
    throw ValidationError(fmt::format("VAR({}) with {} variables needs more than {} observations, have {}", p, k,
                                      k * p + 1, n));
  MatrixXd x(n, m);
  MatrixXd y(n, k);
  for (int r = 0; r < n; ++r) {
    const int t = first_row + r;
    y.row(r) = series.data.row(t);
    x(r, 0) = 1.0;
    for (int i = 1; i <= p; ++i) x.block(r, 1 + (i - 1) * k, 1, k) = series.data.row(t - i);
  }
  const auto f = linalg::ols(x, y);

  VarModel v;
  v.p = p;
  v.k = k;
  v.names = series.names;
  v.data = series.data;
  v.regressors = x;
  v.xtx_inv = f.xtx_inv;
  v.residuals = f.residuals;
  v.intercept = f.coef.row(0).transpose();
  for (int i = 0; i < p; ++i) v.coefs.push_back(f.coef.block(1 + i * k, 0, k, k).transpose());
  const MatrixXd sse = f.residuals.transpose() * f.residuals;
  v.sigma_u = sse / static_cast<double>(n - m);
  v.sigma_mle = sse / static_cast<double>(n);
  v.coef_std_errors.resize(k, m);
  for (int eq = 0; eq < k; ++eq)
    for (int c = 0; c < m; ++c) v.coef_std_errors(eq, c) = std::sqrt(v.sigma_u(eq, eq) * f.xtx_inv(c, c));
  v.eigenvalues = companion_eigenvalues(v.coefs);
  v.stable = std::all_of(v.eigenvalues.begin(), v.eigenvalues.end(),
                         [](const EigenRow& e) { return e.modulus < 1.0 - 1e-10; });
  v.log_likelihood = -0.5 * n * (linalg::log_det_spd(v.sigma_mle) + k * std::log(2.0 * M_PI) + k);
  return v;
}

VarModel fit_var(const Series& series, int p) { return fit_var_sample(series, p, p); }

LagSelection select_lag(const Series& series, int max_lag, double lr_alpha) {
  const int T = series.length(), k = series.dims();
  if (max_lag < 1) throw ValidationError("select_lag: max_lag must be at least 1");
  if (T - max_lag <= k * max_lag + 1)
    throw ValidationError(fmt::format("select_lag: {} observations too few for max_lag {}", T, max_lag));
  LagSelection out;
  out.effective_sample = T - max_lag;
  const double te = out.effective_sample;
  for (int p = 0; p <= max_lag; ++p) {
    const VarModel m = fit_var_sample(series, p, max_lag);
    LagSelectionRow row;
    row.lag = p;
    row.log_likelihood = m.log_likelihood;
    if (p > 0) {
      row.lr = 2.0 * (row.log_likelihood - out.rows.back().log_likelihood);
      row.df = k * k;
      row.p_value = stats::chi2_sf(std::max(0.0, *row.lr), k * k);
    }
    const double tp = k * (k * p + 1.0);
    const double ll2 = -2.0 * row.log_likelihood;
    row.aic = (ll2 + 2.0 * tp) / te;
    row.hqic = (ll2 + 2.0 * tp * std::log(std::log(te))) / te;
    row.sbic = (ll2 + tp * std::log(te)) / te;
    row.fpe = std::exp(linalg::log_det_spd(m.sigma_mle)) * std::pow((te + k * p + 1.0) / (te - k * p - 1.0), k);
    out.rows.push_back(row);
  }
  auto argmin = [&](auto field) {
    int best = 0;
    for (const auto& r : out.rows)
      if (r.*field < out.rows[static_cast<std::size_t>(best)].*field) best = r.lag;
    return best;
  };
  out.fpe_winner = argmin(&LagSelectionRow::fpe);
  out.aic_winner = argmin(&LagSelectionRow::aic);
  out.hqic_winner = argmin(&LagSelectionRow::hqic);
  out.sbic_winner = argmin(&LagSelectionRow::sbic);
  for (int p = max_lag; p >= 1; --p) {
    if (*out.rows[static_cast<std::size_t>(p)].p_value < lr_alpha) {
      out.lr_winner = p;
      break;
    }
  }
  return out;
}

}  // namespace topictrend::multivar
