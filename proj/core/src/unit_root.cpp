#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "topictrend/error.hpp"
#include "topictrend/linalg.hpp"
#include "topictrend/stats.hpp"
#include "topictrend/trend_series.hpp"

namespace topictrend::trend {

namespace {

// MacKinnon (1994) response-surface coefficients for one integrated
// variable, as tabulated in statsmodels (scaling already applied).
struct Surface {
  double tau_star;
  double tau_min;
  double tau_max;
  std::array<double, 3> small;
  std::array<double, 4> large;
};

const Surface& surface(ModelType m) {
  static const Surface kNone{-1.04, -19.04, std::numeric_limits<double>::infinity(),
                             {0.6344, 1.2378, 0.032496}, {0.4797, 0.93557, -0.06999, 0.033066}};
  static const Surface kConst{-1.61, -18.83, 2.74, {2.1659, 1.4412, 0.038269},
                              {1.7339, 0.93202, -0.12745, -0.010368}};
  static const Surface kTrend{-2.89, -16.18, 0.7, {3.2512, 1.6047, 0.049588},
                              {2.5261, 0.61654, -0.37956, -0.060285}};
  switch (m) {
    case ModelType::Type1: return kNone;
    case ModelType::Type2: return kConst;
    default: return kTrend;
  }
}

void check_series(std::span<const double> y, int lag) {
  if (lag < 0) throw ValidationError("unit root: lag must be non-negative");
  if (static_cast<int>(y.size()) < lag + 5)
    throw ValidationError(fmt::format("unit root: series of length {} too short for lag {}", y.size(), lag));
  for (double v : y)
    if (!std::isfinite(v)) throw ValidationError("unit root: non-finite value");
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
    throw NumericalError("unit root: constant series");
}

int deterministic_terms(ModelType m) {
  switch (m) {
    case ModelType::Type1: return 0;
    case ModelType::Type2: return 1;
    default: return 2;
  }
}

struct DfRegression {
  double t = 0.0;      // t-ratio of the lagged level
  double se = 0.0;     // its standard error
  double s2 = 0.0;     // SSR / (n - p)
  VectorXd residuals;
  int n = 0;
};

// Delta y_t on deterministic terms, y_{t-1} and `lag` lagged differences.
DfRegression df_regression(std::span<const double> y, ModelType model, int lag) {
  const int T = static_cast<int>(y.size());
  const int n = T - 1 - lag;
  const int det = deterministic_terms(model);
  const int p = det + 1 + lag;
  if (n <= p) throw ValidationError("unit root: not enough observations for the regression");
  MatrixXd x(n, p);
  VectorXd dy(n);
  for (int r = 0; r < n; ++r) {
    const int t = r + lag + 1;  // index into y of the current observation
    dy(r) = y[static_cast<std::size_t>(t)] - y[static_cast<std::size_t>(t - 1)];
    int c = 0;
    if (det >= 1) x(r, c++) = 1.0;
    if (det >= 2) x(r, c++) = static_cast<double>(t);
    x(r, c++) = y[static_cast<std::size_t>(t - 1)];
    for (int j = 1; j <= lag; ++j)
      x(r, c++) = y[static_cast<std::size_t>(t - j)] - y[static_cast<std::size_t>(t - j - 1)];
  }
  const auto f = linalg::ols(x, dy);
  DfRegression out;
  out.n = n;
  out.residuals = f.residuals.col(0);
  const double ssr = out.residuals.squaredNorm();
  if (ssr <= 1e-24 * std::max(1.0, dy.squaredNorm()))
    throw NumericalError("unit root: regression leaves zero residual variance");
  out.s2 = ssr / (n - p);
  out.se = std::sqrt(out.s2 * f.xtx_inv(det, det));
  out.t = f.coef(det, 0) / out.se;
  return out;
}

PValue censored(double p) {
  if (p < 0.01) return {0.01, Censor::Below};
  if (p > 0.99) return {0.99, Censor::Above};
  return {p, Censor::None};
}

}  // namespace

std::string to_string(UnitRootTest t) {
  switch (t) {
    case UnitRootTest::ADF: return "ADF";
    case UnitRootTest::PP: return "PP";
    default: return "KPSS";
  }
}

std::string to_string(ModelType t) {
  switch (t) {
    case ModelType::Type1: return "Type1";
    case ModelType::Type2: return "Type2";
    default: return "Type3";
  }
}

std::string PValue::str() const {
  switch (censor) {
    case Censor::Below: return fmt::format("<{}", value);
    case Censor::Above: return fmt::format(">{}", value);
    default: return fmt::format("{:.4f}", value);
  }
}

int newey_west_lag(int series_length) {
  if (series_length < 1) throw ValidationError("newey_west_lag: series length must be positive");
  return static_cast<int>(std::floor(4.0 * std::pow(series_length / 100.0, 2.0 / 9.0)));
}

double long_run_variance(std::span<const double> u, int lag) {
  const auto n = static_cast<double>(u.size());
  auto autocov = [&](int j) {
    double s = 0.0;
    for (std::size_t t = static_cast<std::size_t>(j); t < u.size(); ++t) s += u[t] * u[t - static_cast<std::size_t>(j)];
    return s / n;
  };
  double lrv = autocov(0);
  for (int j = 1; j <= lag && j < static_cast<int>(u.size()); ++j)
    lrv += 2.0 * (1.0 - j / (lag + 1.0)) * autocov(j);
  return lrv;
}

double mackinnon_p(double tau, ModelType model) {
  const Surface& s = surface(model);
  if (tau > s.tau_max) return 1.0;
  if (tau < s.tau_min) return 0.0;
  double z = 0.0;
  if (tau <= s.tau_star) {
    for (std::size_t i = s.small.size(); i-- > 0;) z = z * tau + s.small[i];
  } else {
    for (std::size_t i = s.large.size(); i-- > 0;) z = z * tau + s.large[i];
  }
  return stats::normal_cdf(z);
}

PValue kpss_p(double statistic) {
  static constexpr std::array<double, 4> crit{0.347, 0.463, 0.574, 0.739};
  static constexpr std::array<double, 4> prob{0.10, 0.05, 0.025, 0.01};
  if (statistic < crit.front()) return {prob.front(), Censor::Above};
  if (statistic > crit.back()) return {prob.back(), Censor::Below};
  for (std::size_t i = 0; i + 1 < crit.size(); ++i) {
    if (statistic <= crit[i + 1]) {
      const double w = (statistic - crit[i]) / (crit[i + 1] - crit[i]);
      return {prob[i] + w * (prob[i + 1] - prob[i]), Censor::None};
    }
  }
  return {prob.back(), Censor::None};
}

UnitRootReport unit_root_test(std::span<const double> y, UnitRootTest test, ModelType model, int lag) {
  check_series(y, lag);
  UnitRootReport r;
  r.test = test;
  r.lag = lag;
  if (test == UnitRootTest::KPSS) {
    const double mu = stats::mean(y);
    std::vector<double> e(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) e[t] = y[t] - mu;
    double partial = 0.0, sum_sq = 0.0;
    for (double v : e) {
      partial += v;
      sum_sq += partial * partial;
    }
    const auto T = static_cast<double>(y.size());
    const double lrv = long_run_variance(e, lag);
    if (!(lrv > 0.0)) throw NumericalError("KPSS: non-positive long-run variance");
    r.statistic = sum_sq / (T * T * lrv);
    r.p_value = kpss_p(r.statistic);
    r.note = "level stationarity null";
    return r;
  }

  r.model_type = model;
  if (test == UnitRootTest::ADF) {
    const auto reg = df_regression(y, model, lag);
    r.regression_t = reg.t;
    r.statistic = reg.t;
  } else {
    const auto reg = df_regression(y, model, 0);
    r.regression_t = reg.t;
    std::vector<double> u(reg.residuals.data(), reg.residuals.data() + reg.residuals.size());
    const double gamma0 = reg.residuals.squaredNorm() / reg.n;
    const double lambda2 = long_run_variance(u, lag);
    if (!(lambda2 > 0.0)) throw NumericalError("PP: non-positive long-run variance");
    const double lambda = std::sqrt(lambda2);
    r.statistic = std::sqrt(gamma0 / lambda2) * reg.t -
                  (lambda2 - gamma0) / (2.0 * lambda) * (reg.n * reg.se / std::sqrt(reg.s2));
    r.note = "Z-tau";
  }
  r.p_value = censored(mackinnon_p(r.statistic, model));
  return r;
}

std::vector<UnitRootReport> unit_root_battery(std::span<const double> series, int max_adf_lag, int pp_kpss_lag) {
  std::vector<UnitRootReport> out;
  for (int lag = 0; lag <= max_adf_lag; ++lag)
    for (auto m : {ModelType::Type1, ModelType::Type2, ModelType::Type3})
      out.push_back(unit_root_test(series, UnitRootTest::ADF, m, lag));
  for (auto m : {ModelType::Type1, ModelType::Type2, ModelType::Type3})
    out.push_back(unit_root_test(series, UnitRootTest::PP, m, pp_kpss_lag));
  out.push_back(unit_root_test(series, UnitRootTest::KPSS, ModelType::Type1, pp_kpss_lag));
  return out;
}

}  // namespace topictrend::trend
