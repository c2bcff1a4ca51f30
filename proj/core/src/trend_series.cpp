#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "topictrend/error.hpp"
#include "topictrend/linalg.hpp"
#include "topictrend/stats.hpp"
#include "topictrend/trend_series.hpp"

namespace topictrend::trend {

namespace {

PrevalenceSeries group_means(const MatrixXd& values, std::span<const int> years, std::vector<std::string> labels) {
  if (static_cast<Eigen::Index>(years.size()) != values.rows())
    throw ValidationError(fmt::format("prevalence: {} years for {} documents", years.size(), values.rows()));
  if (years.empty()) throw ValidationError("prevalence: no documents");
  std::vector<int> uniq(years.begin(), years.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  PrevalenceSeries s;
  s.years = uniq;
  s.labels = std::move(labels);
  s.values = MatrixXd::Zero(static_cast<Eigen::Index>(uniq.size()), values.cols());
  s.doc_counts.assign(uniq.size(), 0);
  for (std::size_t d = 0; d < years.size(); ++d) {
    const auto i = std::lower_bound(uniq.begin(), uniq.end(), years[d]) - uniq.begin();
    s.values.row(i) += values.row(static_cast<Eigen::Index>(d));
    ++s.doc_counts[static_cast<std::size_t>(i)];
  }
  for (std::size_t i = 0; i < uniq.size(); ++i) s.values.row(static_cast<Eigen::Index>(i)) /= s.doc_counts[i];
  for (int y = uniq.front(); y <= uniq.back(); ++y)
    if (!std::binary_search(uniq.begin(), uniq.end(), y)) s.missing_years.push_back(y);
  return s;
}

}  // namespace

std::vector<double> PrevalenceSeries::column_for_testing(const std::string& label) const {
  if (!missing_years.empty())
    throw ValidationError(fmt::format("series has {} missing year(s); refusing to test", missing_years.size()));
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw ValidationError(fmt::format("unknown series '{}'", label));
  const auto c = it - labels.begin();
  return {values.col(c).data(), values.col(c).data() + values.rows()};
}

PrevalenceSeries yearly_prevalence(const MatrixXd& theta, std::span<const int> years) {
  std::vector<std::string> labels;
  for (Eigen::Index k = 0; k < theta.cols(); ++k) labels.push_back(fmt::format("topic_{}", k + 1));
  return group_means(theta, years, std::move(labels));
}

std::pair<MatrixXd, std::vector<std::string>> category_shares(const MatrixXd& theta,
                                                              const std::map<int, std::string>& category_map) {
  std::vector<std::string> labels;
  bool external = false;
  for (Eigen::Index k = 0; k < theta.cols(); ++k) {
    const auto it = category_map.find(static_cast<int>(k));
    if (it == category_map.end()) {
      external = true;
      continue;
    }
    if (it->second == kExternalCategory) external = true;
    else if (std::find(labels.begin(), labels.end(), it->second) == labels.end()) labels.push_back(it->second);
  }
  for (const auto& [k, _] : category_map)
    if (k < 0 || k >= theta.cols())
      throw ValidationError(fmt::format("category map names topic {} but the model has {} topics", k, theta.cols()));
  if (external) labels.push_back(kExternalCategory);

  MatrixXd shares = MatrixXd::Zero(theta.rows(), static_cast<Eigen::Index>(labels.size()));
  for (Eigen::Index k = 0; k < theta.cols(); ++k) {
    const auto it = category_map.find(static_cast<int>(k));
    const std::string& label = it == category_map.end() ? std::string(kExternalCategory) : it->second;
    const auto c = std::find(labels.begin(), labels.end(), label) - labels.begin();
    shares.col(c) += theta.col(k);
  }
  return {shares, labels};
}

PrevalenceSeries yearly_prevalence(const MatrixXd& theta, std::span<const int> years,
                                   const std::map<int, std::string>& category_map) {
  auto [shares, labels] = category_shares(theta, category_map);
  auto s = group_means(shares, years, std::move(labels));
  s.category_map = category_map;
  return s;
}

double ecdf_at(std::span<const double> sample, double x) {
  if (sample.empty()) throw ValidationError("ecdf: empty sample");
  const auto n = std::count_if(sample.begin(), sample.end(), [&](double v) { return v <= x; });
  return static_cast<double>(n) / static_cast<double>(sample.size());
}

namespace {

// Signed sup of F_a - F_b and of F_b - F_a over the pooled support.
std::pair<double, double> ks_extremes(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("KS: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<double> pooled = sa;
  pooled.insert(pooled.end(), sb.begin(), sb.end());
  std::sort(pooled.begin(), pooled.end());
  double up = 0.0, down = 0.0;
  for (double x : pooled) {
    const double fa = static_cast<double>(std::upper_bound(sa.begin(), sa.end(), x) - sa.begin()) / sa.size();
    const double fb = static_cast<double>(std::upper_bound(sb.begin(), sb.end(), x) - sb.begin()) / sb.size();
    up = std::max(up, fa - fb);
    down = std::max(down, fb - fa);
  }
  return {up, down};
}

}  // namespace

KsResult ks_dominance_p(double d_plus, std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw ValidationError("ks: empty sample");
  KsResult r;
  r.d_plus = d_plus;
  if (d_plus <= 0.0) return r;
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  r.p_value = std::exp(-2.0 * d_plus * d_plus * dm * dn / (dm + dn));
  if (r.p_value < kReportablePFloor) {
    r.p_value = kReportablePFloor;
    r.p_floored = true;
  }
  return r;
}

KsResult ks_dominance(std::span<const double> a, std::span<const double> b) {
  return ks_dominance_p(ks_extremes(a, b).first, a.size(), b.size());
}

double ks_two_sided(std::span<const double> a, std::span<const double> b) {
  const auto [up, down] = ks_extremes(a, b);
  return std::max(up, down);
}

double silverman_bandwidth(std::span<const double> sample) {
  if (sample.size() < 2) throw ValidationError("bandwidth: need at least two observations");
  const double sd = stats::stddev(sample);
  const std::vector<double> v(sample.begin(), sample.end());
  const double iqr = stats::quantile(v, 0.75) - stats::quantile(v, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) throw NumericalError("bandwidth: degenerate sample");
  return 0.9 * spread * std::pow(static_cast<double>(sample.size()), -0.2);
}

Curve density_curves(std::span<const double> sample, CurveKind kind, int grid_points) {
  if (sample.size() < 2) throw ValidationError("density: need at least two observations");
  if (grid_points < 2) throw ValidationError("density: need at least two grid points");
  const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
  const double lo = *lo_it, hi = *hi_it;
  Curve c;
  if (kind == CurveKind::Pdf || lo < hi) c.bandwidth = silverman_bandwidth(sample);
  double a = lo - 3.0 * c.bandwidth, b = hi + 3.0 * c.bandwidth;
  if (a == b) {
    a -= 0.5;
    b += 0.5;
  }
  c.x.resize(static_cast<std::size_t>(grid_points));
  c.y.resize(c.x.size());
  const double n = static_cast<double>(sample.size());
  const double norm = 1.0 / (n * c.bandwidth * std::sqrt(2.0 * M_PI));
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < grid_points; ++i) {
    const double x = a + (b - a) * i / (grid_points - 1);
    c.x[static_cast<std::size_t>(i)] = x;
    if (kind == CurveKind::Cdf) {
      c.y[static_cast<std::size_t>(i)] =
          static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / n;
    } else {
      double s = 0.0;
      for (double v : sorted) {
        const double z = (x - v) / c.bandwidth;
        s += std::exp(-0.5 * z * z);
      }
      c.y[static_cast<std::size_t>(i)] = s * norm;
    }
  }
  return c;
}

PolynomialTrend polynomial_trend(std::span<const int> years, std::span<const double> values, int degree) {
  if (degree < 1) throw ValidationError("polynomial trend: degree must be at least 1");
  if (years.size() != values.size()) throw ValidationError("polynomial trend: years and values differ in length");
  const auto n = static_cast<Eigen::Index>(years.size());
  if (n <= degree + 1)
    throw ValidationError(fmt::format("polynomial trend: {} points cannot support degree {}", n, degree));
  PolynomialTrend p;
  p.degree = degree;
  p.x_origin = years.front();
  MatrixXd x(n, degree + 1);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = years[static_cast<std::size_t>(i)] - p.x_origin;
    double pw = 1.0;
    for (int j = 0; j <= degree; ++j, pw *= t) x(i, j) = pw;
    y(i) = values[static_cast<std::size_t>(i)];
  }
  const auto f = linalg::ols(x, y);
  p.coefficients.assign(f.coef.data(), f.coef.data() + f.coef.rows());
  const VectorXd fitted = x * f.coef.col(0);
  p.fitted.assign(fitted.data(), fitted.data() + n);
  p.residuals.assign(f.residuals.data(), f.residuals.data() + n);
  return p;
}

TopQuantileSeries top_quantile_series(const MatrixXd& theta, std::span<const int> years, int degree) {
  MatrixXd top(theta.rows(), 1);
  for (Eigen::Index d = 0; d < theta.rows(); ++d) top(d, 0) = theta.row(d).maxCoeff();
  const auto s = group_means(top, years, {"top_share"});
  TopQuantileSeries out;
  out.years = s.years;
  out.values.assign(s.values.data(), s.values.data() + s.values.rows());
  out.doc_counts = s.doc_counts;
  out.trend = polynomial_trend(out.years, out.values, degree);
  return out;
}

}  // namespace topictrend::trend
