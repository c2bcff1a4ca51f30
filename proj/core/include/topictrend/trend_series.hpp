#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace topictrend::trend {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr const char* kExternalCategory = "external";

struct PrevalenceSeries {
  std::vector<int> years;            // strictly increasing
  std::vector<std::string> labels;   // one per column
  MatrixXd values;                   // years x labels, per-year means
  std::vector<int> doc_counts;       // per year
  std::vector<int> missing_years;    // gaps between first and last year
  std::map<int, std::string> category_map;  // empty when grouped by topic

  /// Column as a plain vector; throws ValidationError when the series has
  /// internal gaps.
  std::vector<double> column_for_testing(const std::string& label) const;
};

/// Per-year mean of theta columns.
PrevalenceSeries yearly_prevalence(const MatrixXd& theta, std::span<const int> years);

/// Per-year mean of category sums. Topics absent from `category_map` go to
/// the "external" bucket.
PrevalenceSeries yearly_prevalence(const MatrixXd& theta, std::span<const int> years,
                                   const std::map<int, std::string>& category_map);

/// Per-document category shares (D x categories) in the column order the
/// category series uses.
std::pair<MatrixXd, std::vector<std::string>> category_shares(const MatrixXd& theta,
                                                              const std::map<int, std::string>& category_map);

/// floor(4 * (T / 100)^(2/9)).
int newey_west_lag(int series_length);

/// Bartlett-weighted long-run variance of `u` (divisor n) with bandwidth `lag`.
double long_run_variance(std::span<const double> u, int lag);

enum class UnitRootTest { ADF, PP, KPSS };
/// Type1: no drift, no trend. Type2: drift. Type3: drift and trend.
enum class ModelType { Type1, Type2, Type3 };

std::string to_string(UnitRootTest t);
std::string to_string(ModelType t);

enum class Censor { None, Below, Above };

struct PValue {
  double value = 1.0;
  Censor censor = Censor::None;
  std::string str() const;
};

struct UnitRootReport {
  UnitRootTest test = UnitRootTest::ADF;
  std::optional<ModelType> model_type;  // absent for KPSS
  int lag = 0;
  double statistic = 0.0;
  PValue p_value;
  /// Raw Dickey-Fuller t-ratio of the lagged level (ADF and PP).
  double regression_t = 0.0;
  std::string note;
};

/// MacKinnon (1994) response-surface p-value for a Dickey-Fuller tau,
/// before censoring.
double mackinnon_p(double tau, ModelType model);

/// KPSS level-stationarity p-value interpolated in the tabulated 1%-10%
/// range and censored outside it.
PValue kpss_p(double statistic);

UnitRootReport unit_root_test(std::span<const double> series, UnitRootTest test, ModelType model, int lag);

/// ADF lags 0..2 x types 1..3, PP types 1..3 and KPSS at `pp_kpss_lag`.
std::vector<UnitRootReport> unit_root_battery(std::span<const double> series, int max_adf_lag = 2,
                                              int pp_kpss_lag = 2);

struct KsResult {
  double d_plus = 0.0;
  double p_value = 1.0;
  bool p_floored = false;
};

inline constexpr double kReportablePFloor = 2.2e-16;

/// D+ = sup_x (F_a(x) - F_b(x)) with asymptotic p = exp(-2 D^2 mn/(m+n)).
KsResult ks_dominance(std::span<const double> sample_a, std::span<const double> sample_b);
/// The same p-value from a known statistic and sample sizes.
KsResult ks_dominance_p(double d_plus, std::size_t m, std::size_t n);
/// sup_x |F_a(x) - F_b(x)|.
double ks_two_sided(std::span<const double> sample_a, std::span<const double> sample_b);

double ecdf_at(std::span<const double> sample, double x);

enum class CurveKind { Pdf, Cdf };

struct Curve {
  std::vector<double> x;
  std::vector<double> y;
  double bandwidth = 0.0;
};

/// Silverman rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
double silverman_bandwidth(std::span<const double> sample);

/// Gaussian KDE (pdf) or ECDF (cdf) on a 512-point grid spanning
/// [min - 3h, max + 3h].
Curve density_curves(std::span<const double> sample, CurveKind kind, int grid_points = 512);

struct PolynomialTrend {
  int degree = 0;
  int x_origin = 0;            // regressor is year - x_origin
  std::vector<double> coefficients;  // constant first
  std::vector<double> fitted;
  std::vector<double> residuals;
};

struct TopQuantileSeries {
  std::vector<int> years;
  std::vector<double> values;
  std::vector<int> doc_counts;
  PolynomialTrend trend;
};

/// Yearly mean of each document's largest topic share with an OLS
/// polynomial trend of the given degree.
TopQuantileSeries top_quantile_series(const MatrixXd& theta, std::span<const int> years, int degree = 3);

PolynomialTrend polynomial_trend(std::span<const int> years, std::span<const double> values, int degree);

}  // namespace topictrend::trend
