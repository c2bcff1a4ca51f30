#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "topictrend/error.hpp"
#include "topictrend/linalg.hpp"
#include "topictrend/multivar.hpp"
#include "topictrend/random.hpp"
#include "topictrend/stats.hpp"

namespace topictrend::multivar {

namespace {

// Wald statistic b' V^-1 b for the coefficients of equation `eq` in the
// regressor columns `cols`, with V = sigma_mle(eq, eq) * (X'X)^-1.
double wald(const VarModel& m, int eq, const std::vector<int>& cols) {
  const auto q = static_cast<Eigen::Index>(cols.size());
  VectorXd b(q);
  MatrixXd v(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    const int ca = cols[static_cast<std::size_t>(a)];
    const int lag = (ca - 1) / m.k, var = (ca - 1) % m.k;
    b(a) = m.coefs[static_cast<std::size_t>(lag)](eq, var);
    for (Eigen::Index c = 0; c < q; ++c) v(a, c) = m.sigma_mle(eq, eq) * m.xtx_inv(ca, cols[static_cast<std::size_t>(c)]);
  }
  return b.dot(v.ldlt().solve(b));
}

std::vector<MatrixXd> irf_paths(const std::vector<MatrixXd>& coefs, const MatrixXd& sigma, int k, int horizon,
                                bool ortho) {
  auto phi = ma_coefficients(coefs, k, horizon);
  if (ortho) {
    const MatrixXd p = linalg::cholesky_lower(sigma);
    for (auto& m : phi) m = m * p;
  }
  return phi;
}

std::vector<MatrixXd> fevd_shares(const std::vector<MatrixXd>& coefs, const MatrixXd& sigma, int k, int horizon) {
  const auto theta = irf_paths(coefs, sigma, k, std::max(horizon - 1, 0), true);
  std::vector<MatrixXd> out;
  MatrixXd acc = MatrixXd::Zero(k, k);
  for (int s = 1; s <= std::max(horizon, 1); ++s) {
    acc += theta[static_cast<std::size_t>(s - 1)].cwiseAbs2();
    MatrixXd share = acc;
    for (int i = 0; i < k; ++i) share.row(i) /= acc.row(i).sum();
    out.push_back(share);
  }
  out.insert(out.begin(), out.front());  // step 0 repeats the impact decomposition
  out.resize(static_cast<std::size_t>(horizon + 1));
  return out;
}

// Percentile bands and standard deviations across bootstrap draws.
struct Bands {
  std::vector<MatrixXd> lower, upper, sd;
};

Bands summarize(const std::vector<std::vector<MatrixXd>>& draws, double level) {
  Bands b;
  const std::size_t H = draws.front().size();
  const auto rows = draws.front().front().rows(), cols = draws.front().front().cols();
  std::vector<double> vals(draws.size());
  for (std::size_t h = 0; h < H; ++h) {
    MatrixXd lo(rows, cols), hi(rows, cols), sd(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        for (std::size_t d = 0; d < draws.size(); ++d) vals[d] = draws[d][h](i, j);
        lo(i, j) = stats::quantile(vals, 0.5 - level / 2.0);
        hi(i, j) = stats::quantile(vals, 0.5 + level / 2.0);
        sd(i, j) = stats::stddev(vals);
      }
    }
    b.lower.push_back(lo);
    b.upper.push_back(hi);
    b.sd.push_back(sd);
  }
  return b;
}

void check_bootstrap(const Bootstrap& b) {
  if (b.replications < 2) throw ValidationError("bootstrap needs at least two replications");
  if (!(b.level > 0.0 && b.level < 1.0)) throw ValidationError("bootstrap level must lie in (0, 1)");
}

NormalityRow normality_row(const VectorXd& w, const std::string& name) {
  const double n = static_cast<double>(w.size());
  NormalityRow r;
  r.equation = name;
  r.skewness = w.array().cube().sum() / n;
  r.kurtosis = w.array().square().square().sum() / n;
  r.skewness_chi2 = n * r.skewness * r.skewness / 6.0;
  r.kurtosis_chi2 = n * (r.kurtosis - 3.0) * (r.kurtosis - 3.0) / 24.0;
  r.jb = r.skewness_chi2 + r.kurtosis_chi2;
  r.skewness_p = stats::chi2_sf(r.skewness_chi2, 1);
  r.kurtosis_p = stats::chi2_sf(r.kurtosis_chi2, 1);
  r.jb_p = stats::chi2_sf(r.jb, 2);
  return r;
}

// Auxiliary regression of the residuals on the original regressors and the
// residuals lagged `lag` periods (zeros before the sample).
std::vector<LmRow> lm_rows(const MatrixXd& resid, const MatrixXd& regressors, int max_lag) {
  const auto T = resid.rows(), k = resid.cols();
  if (T <= regressors.cols() + k + 1) throw ValidationError("LM test: too few residuals");
  const double ld_full = linalg::log_det_spd(resid.transpose() * resid / static_cast<double>(T));
  std::vector<LmRow> rows;
  for (int s = 1; s <= max_lag; ++s) {
    MatrixXd x(T, regressors.cols() + k);
    x.leftCols(regressors.cols()) = regressors;
    x.rightCols(k).setZero();
    for (Eigen::Index t = s; t < T; ++t) x.block(t, regressors.cols(), 1, k) = resid.row(t - s);
    const auto f = linalg::ols(x, resid);
    const double ld_aux = linalg::log_det_spd(f.residuals.transpose() * f.residuals / static_cast<double>(T));
    LmRow r;
    r.lag = s;
    r.df = static_cast<int>(k * k);
    r.chi2 = (static_cast<double>(T) - static_cast<double>(x.cols()) - 0.5) * (ld_full - ld_aux);
    r.p_value = stats::chi2_sf(std::max(0.0, r.chi2), r.df);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

GrangerReport granger_wald(const Series& series, int p, int d_max, GrangerMode mode) {
  if (p < 1 || d_max < 0) throw ValidationError("granger: need p >= 1 and d_max >= 0");
  const VarModel m = fit_var(series, p + d_max);
  const int tested = mode == GrangerMode::AllLags ? p + d_max : p;
  GrangerReport rep;
  rep.p = p;
  rep.d_max = d_max;
  rep.mode = mode;
  const int k = m.k;
  auto cols_for = [&](int var) {
    std::vector<int> cols;
    for (int lag = 0; lag < tested; ++lag) cols.push_back(1 + lag * k + var);
    return cols;
  };
  for (int eq = 0; eq < k; ++eq) {
    std::vector<int> all;
    for (int cause = 0; cause < k; ++cause) {
      if (cause == eq) continue;
      const auto cols = cols_for(cause);
      all.insert(all.end(), cols.begin(), cols.end());
      GrangerRow row;
      row.equation = series.names[static_cast<std::size_t>(eq)];
      row.excluded = series.names[static_cast<std::size_t>(cause)];
      row.chi2 = wald(m, eq, cols);
      row.df = tested;
      row.p_value = stats::chi2_sf(row.chi2, row.df);
      rep.rows.push_back(row);
    }
    std::sort(all.begin(), all.end());
    GrangerRow row;
    row.equation = series.names[static_cast<std::size_t>(eq)];
    row.excluded = "ALL";
    row.chi2 = wald(m, eq, all);
    row.df = static_cast<int>(all.size());
    row.p_value = stats::chi2_sf(row.chi2, row.df);
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<MatrixXd> ma_coefficients(const std::vector<MatrixXd>& coefs, int k, int horizon) {
  if (horizon < 0) throw ValidationError("horizon must be non-negative");
  std::vector<MatrixXd> phi{MatrixXd::Identity(k, k)};
  const int p = static_cast<int>(coefs.size());
  for (int h = 1; h <= horizon; ++h) {
    MatrixXd m = MatrixXd::Zero(k, k);
    for (int i = 1; i <= std::min(h, p); ++i)
      m += phi[static_cast<std::size_t>(h - i)] * coefs[static_cast<std::size_t>(i - 1)];
    phi.push_back(m);
  }
  return phi;
}

VarModel bootstrap_replicate(const VarModel& model, std::uint64_t seed) {
  const int T = static_cast<int>(model.data.rows()), k = model.k, p = model.p;
  const auto n = model.residuals.rows();
  const MatrixXd centered = model.residuals.rowwise() - model.residuals.colwise().mean();
  Engine engine(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  MatrixXd y = model.data;
  const int first = T - static_cast<int>(n);
  for (int t = first; t < T; ++t) {
    VectorXd v = model.intercept + centered.row(pick(engine)).transpose();
    for (int i = 1; i <= p; ++i) v += model.coefs[static_cast<std::size_t>(i - 1)] * y.row(t - i).transpose();
    y.row(t) = v.transpose();
  }
  Series s{y, model.names};
  (void)k;
  return fit_var_sample(s, p, first);
}

ImpulseResponse impulse_response(const VarModel& model, int horizon, bool orthogonalized, std::optional<Bootstrap> ci) {
  ImpulseResponse out;
  out.orthogonalized = orthogonalized;
  out.names = model.names;
  out.response = irf_paths(model.coefs, model.sigma_u, model.k, horizon, orthogonalized);
  if (orthogonalized) out.note = "Cholesky factor in declared variable order";
  if (ci) {
    check_bootstrap(*ci);
    std::vector<std::vector<MatrixXd>> draws;
    for (int b = 0; b < ci->replications; ++b) {
      const VarModel rep = bootstrap_replicate(model, substream_seed(ci->seed, "bootstrap", static_cast<std::uint64_t>(b)));
      draws.push_back(irf_paths(rep.coefs, rep.sigma_u, rep.k, horizon, orthogonalized));
    }
    auto bands = summarize(draws, ci->level);
    out.lower = std::move(bands.lower);
    out.upper = std::move(bands.upper);
  }
  return out;
}

ImpulseResponse impulse_response(const VecmModel& model, int horizon, bool orthogonalized, std::optional<Bootstrap> ci) {
  ImpulseResponse out;
  out.orthogonalized = orthogonalized;
  out.names = model.names;
  out.response = irf_paths(model.level_coefs, model.sigma_u, model.k, horizon, orthogonalized);
  out.note = "point paths from the levels representation of the VECM";
  if (ci) {
    out.bands_refused = true;
    out.note += "; confidence bands are not computed for VECM responses";
  }
  return out;
}

Fevd fevd(const VarModel& model, int horizon, std::optional<Bootstrap> ci) {
  if (horizon < 0) throw ValidationError("horizon must be non-negative");
  Fevd out;
  out.names = model.names;
  out.share = fevd_shares(model.coefs, model.sigma_u, model.k, horizon);
  if (ci) {
    check_bootstrap(*ci);
    std::vector<std::vector<MatrixXd>> draws;
    for (int b = 0; b < ci->replications; ++b) {
      const VarModel rep = bootstrap_replicate(model, substream_seed(ci->seed, "bootstrap", static_cast<std::uint64_t>(b)));
      draws.push_back(fevd_shares(rep.coefs, rep.sigma_u, rep.k, horizon));
    }
    auto bands = summarize(draws, ci->level);
    out.std_error = std::move(bands.sd);
    out.lower = std::move(bands.lower);
    out.upper = std::move(bands.upper);
  }
  return out;
}

NormalityReport normality(const MatrixXd& residuals, const std::vector<std::string>& names) {
  const auto T = residuals.rows(), k = residuals.cols();
  if (T < k + 2) throw ValidationError("normality: too few residuals");
  const MatrixXd centered = residuals.rowwise() - residuals.colwise().mean();
  const MatrixXd sigma = centered.transpose() * centered / static_cast<double>(T);
  const MatrixXd p = linalg::cholesky_lower(sigma);
  const MatrixXd w = p.triangularView<Eigen::Lower>().solve(centered.transpose()).transpose();
  NormalityReport rep;
  for (Eigen::Index i = 0; i < k; ++i) {
    const std::string name = i < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(i)]
                                                                          : fmt::format("y{}", i + 1);
    rep.equations.push_back(normality_row(w.col(i), name));
    rep.joint_skewness_chi2 += rep.equations.back().skewness_chi2;
    rep.joint_kurtosis_chi2 += rep.equations.back().kurtosis_chi2;
  }
  rep.joint_jb = rep.joint_skewness_chi2 + rep.joint_kurtosis_chi2;
  rep.joint_skewness_df = rep.joint_kurtosis_df = static_cast<int>(k);
  rep.joint_jb_df = static_cast<int>(2 * k);
  rep.joint_skewness_p = stats::chi2_sf(rep.joint_skewness_chi2, rep.joint_skewness_df);
  rep.joint_kurtosis_p = stats::chi2_sf(rep.joint_kurtosis_chi2, rep.joint_kurtosis_df);
  rep.joint_jb_p = stats::chi2_sf(rep.joint_jb, rep.joint_jb_df);
  return rep;
}

std::vector<LmRow> lm_autocorrelation(const VarModel& model, int max_lag) {
  return lm_rows(model.residuals, model.regressors, max_lag);
}

Diagnostics diagnostics(const VarModel& model, int lm_max_lag) {
  Diagnostics d;
  d.stability = model.eigenvalues;
  d.stable = model.stable;
  d.normality = normality(model.residuals, model.names);
  d.lm = lm_autocorrelation(model, lm_max_lag);
  return d;
}

Diagnostics diagnostics(const VecmModel& model, const Series& series, int lm_max_lag) {
  const int k = model.k, p = model.p, T = series.length();
  const int n = T - p;
  if (model.residuals.rows() != n) throw ValidationError("diagnostics: series does not match the VECM sample");
  const int cols = model.rank + k * (p - 1) + (model.det == DetSpec::Constant ? 1 : 0);
  MatrixXd x(n, cols);
  for (int r = 0; r < n; ++r) {
    const int t = p + r;
    int c = 0;
    if (model.rank > 0) {
      x.block(r, 0, 1, model.rank) = series.data.row(t - 1) * model.beta;
      c = model.rank;
    }
    for (int i = 1; i < p; ++i, c += k) x.block(r, c, 1, k) = series.data.row(t - i) - series.data.row(t - i - 1);
    if (model.det == DetSpec::Constant) x(r, c) = 1.0;
  }
  Diagnostics d;
  d.stability = model.eigenvalues;
  // The imposed unit roots are expected; stability concerns the remainder.
  int unit = model.k - model.rank;
  d.stable = true;
  for (const auto& e : model.eigenvalues) {
    if (unit > 0 && std::abs(e.modulus - 1.0) <= 1e-6) {
      --unit;
      continue;
    }
    if (e.modulus >= 1.0 - 1e-10) d.stable = false;
  }
  d.normality = normality(model.residuals, model.names);
  d.lm = lm_rows(model.residuals, x, lm_max_lag);
  return d;
}

}  // namespace topictrend::multivar
