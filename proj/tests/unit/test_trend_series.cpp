#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "generators.hpp"
#include "topictrend/error.hpp"
#include "topictrend/trend_series.hpp"

using namespace topictrend;
using namespace topictrend::trend;
using Eigen::MatrixXd;

namespace {

MatrixXd random_theta(std::mt19937_64& rng, int D, int K) {
  std::gamma_distribution<double> g(1.0, 1.0);
  MatrixXd t(D, K);
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < K; ++k) t(d, k) = g(rng);
    t.row(d) /= t.row(d).sum();
  }
  return t;
}

}  // namespace

TEST(Prevalence, SingleDocumentYear) {
  MatrixXd theta(3, 2);
  theta << 0.2, 0.8, 0.6, 0.4, 0.3, 0.7;
  const std::vector<int> years{2001, 2002, 2002};
  const auto s = yearly_prevalence(theta, years);
  EXPECT_EQ(s.years, (std::vector<int>{2001, 2002}));
  EXPECT_DOUBLE_EQ(s.values(0, 0), 0.2);
  EXPECT_DOUBLE_EQ(s.values(0, 1), 0.8);
  EXPECT_EQ(s.doc_counts, (std::vector<int>{1, 2}));
}

TEST(Prevalence, MatchesGroupByOracle) {
  std::mt19937_64 rng(1);
  const auto theta = random_theta(rng, 60, 4);
  std::vector<int> years;
  std::uniform_int_distribution<int> y(2000, 2004);
  for (int d = 0; d < 60; ++d) years.push_back(y(rng));
  const auto s = yearly_prevalence(theta, years);
  std::map<int, std::pair<Eigen::RowVectorXd, int>> acc;
  for (int d = 0; d < 60; ++d) {
    auto& [sum, n] = acc.try_emplace(years[static_cast<std::size_t>(d)], Eigen::RowVectorXd::Zero(4), 0).first->second;
    sum += theta.row(d);
    ++n;
  }
  ASSERT_EQ(s.years.size(), acc.size());
  std::size_t i = 0;
  for (const auto& [year, v] : acc) {
    EXPECT_EQ(s.years[i], year);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(s.values(static_cast<Eigen::Index>(i), k), v.first(k) / v.second, 1e-14);
    EXPECT_NEAR(s.values.row(static_cast<Eigen::Index>(i)).sum(), 1.0, 1e-6);
    ++i;
  }
}

TEST(Prevalence, CategoryPartitionSumsToOne) {
  std::mt19937_64 rng(2);
  const auto theta = random_theta(rng, 40, 5);
  std::vector<int> years;
  for (int d = 0; d < 40; ++d) years.push_back(2000 + d % 4);
  const std::map<int, std::string> cmap{{0, "rules"}, {1, "rules"}, {2, "markets"}};
  const auto s = yearly_prevalence(theta, years, cmap);
  EXPECT_EQ(s.labels.back(), kExternalCategory);
  EXPECT_EQ(s.labels.size(), 3u);
  for (Eigen::Index r = 0; r < s.values.rows(); ++r) EXPECT_NEAR(s.values.row(r).sum(), 1.0, 1e-6);
}

TEST(Prevalence, GapsReportedNotInterpolated) {
  MatrixXd theta(2, 2);
  theta << 0.5, 0.5, 0.1, 0.9;
  const std::vector<int> years{2000, 2003};
  const auto s = yearly_prevalence(theta, years);
  EXPECT_EQ(s.years, (std::vector<int>{2000, 2003}));
  EXPECT_EQ(s.missing_years, (std::vector<int>{2001, 2002}));
  EXPECT_THROW(s.column_for_testing("topic_1"), ValidationError);
}

TEST(NeweyWest, LagRule) {
  EXPECT_EQ(newey_west_lag(22), 2);
  EXPECT_EQ(newey_west_lag(100), 4);
  EXPECT_EQ(newey_west_lag(50), 3);
}

TEST(NeweyWest, LongRunVarianceBartlett) {
  const std::vector<double> u{1.0, -2.0, 0.5, 3.0, -1.5};
  const int n = 5, lag = 2;
  double s = 0.0;
  for (double v : u) s += v * v;
  s /= n;
  for (int l = 1; l <= lag; ++l) {
    double g = 0.0;
    for (int t = l; t < n; ++t) g += u[static_cast<std::size_t>(t)] * u[static_cast<std::size_t>(t - l)];
    s += 2.0 * (1.0 - l / (lag + 1.0)) * g / n;
  }
  EXPECT_NEAR(long_run_variance(u, lag), s, 1e-14);
}

TEST(UnitRoot, DegenerateTrendRejected) {
  const std::vector<double> y{1, 2, 3, 4, 5};
  EXPECT_THROW(unit_root_test(y, UnitRootTest::ADF, ModelType::Type3, 0), NumericalError);
}

TEST(UnitRoot, PValueSurface) {
  // statsmodels mackinnonp(-2.86, regression="c") ~ 0.0501
  EXPECT_NEAR(mackinnon_p(-2.8621, ModelType::Type2), 0.05, 2e-3);
  EXPECT_NEAR(mackinnon_p(-1.9416, ModelType::Type1), 0.05, 2e-3);
  EXPECT_NEAR(mackinnon_p(-3.4126, ModelType::Type3), 0.05, 2e-3);
  EXPECT_EQ(kpss_p(0.463).value, 0.05);
  EXPECT_EQ(kpss_p(5.0).censor, Censor::Below);
  EXPECT_EQ(kpss_p(0.01).censor, Censor::Above);
  EXPECT_EQ(kpss_p(5.0).str(), "<0.01");
}

TEST(UnitRoot, BatteryShape) {
  testsupport::Rng rng(3);
  const auto y = testsupport::random_walk(rng, 22);
  const auto b = unit_root_battery(y, 2, newey_west_lag(22));
  ASSERT_EQ(b.size(), 9u + 3u + 1u);
  EXPECT_EQ(b.back().test, UnitRootTest::KPSS);
  EXPECT_EQ(b.back().lag, 2);
  for (const auto& r : b) {
    EXPECT_TRUE(std::isfinite(r.statistic));
    EXPECT_GE(r.p_value.value, 0.01);
    EXPECT_LE(r.p_value.value, 0.99);
  }
}

TEST(UnitRoot, AdfSizeAndPower) {
  testsupport::Rng rng(42);
  int reject_rw = 0, reject_ar = 0;
  const int reps = 300;
  for (int i = 0; i < reps; ++i) {
    const auto rw = testsupport::random_walk(rng, 200);
    const auto ar = testsupport::ar1(rng, 200, 0.5);
    reject_rw += unit_root_test(rw, UnitRootTest::ADF, ModelType::Type2, 0).p_value.value < 0.05;
    reject_ar += unit_root_test(ar, UnitRootTest::ADF, ModelType::Type2, 0).p_value.value < 0.05;
  }
  EXPECT_NEAR(reject_rw / double(reps), 0.05, 0.035);
  EXPECT_GE(reject_ar / double(reps), 0.9);
}

TEST(UnitRoot, PhillipsPerronRejectsStationary) {
  testsupport::Rng rng(5);
  int reject = 0;
  for (int i = 0; i < 100; ++i)
    reject += unit_root_test(testsupport::ar1(rng, 200, 0.5), UnitRootTest::PP, ModelType::Type2, 4).p_value.value < 0.05;
  EXPECT_GE(reject, 90);
}

TEST(Ks, IdenticalAndSeparated) {
  const std::vector<double> a{0.1, 0.4, 0.2, 0.9};
  const auto same = ks_dominance(a, a);
  EXPECT_EQ(same.d_plus, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  std::vector<double> b;
  for (double v : a) b.push_back(v + 1000);
  EXPECT_EQ(ks_dominance(a, b).d_plus, 1.0);
  EXPECT_EQ(ks_dominance(b, a).d_plus, 0.0);
  EXPECT_EQ(ks_two_sided(a, b), 1.0);
}

TEST(Ks, BruteForceSupremum) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> a(37), b(53);
  for (auto& v : a) v = n(rng);
  for (auto& v : b) v = n(rng) + 0.3;
  double best = 0.0;
  std::vector<double> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  for (double x : pts) best = std::max(best, ecdf_at(a, x) - ecdf_at(b, x));
  const auto r = ks_dominance(a, b);
  EXPECT_NEAR(r.d_plus, best, 1e-15);
  EXPECT_NEAR(r.p_value, std::exp(-2.0 * best * best * 37.0 * 53.0 / 90.0), 1e-15);
}

TEST(Density, CdfAndPdfProperties) {
  const std::vector<double> s{1, 2, 3};
  EXPECT_NEAR(ecdf_at(s, 2.0), 2.0 / 3.0, 1e-15);
  const auto cdf = density_curves(s, CurveKind::Cdf);
  EXPECT_EQ(cdf.y.front(), 0.0);
  EXPECT_EQ(cdf.y.back(), 1.0);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(10000);
  for (auto& v : x) v = n(rng);
  const auto pdf = density_curves(x, CurveKind::Pdf);
  // Close to the standard normal density everywhere on the grid.
  for (std::size_t i = 0; i < pdf.x.size(); ++i)
    EXPECT_NEAR(pdf.y[i], std::exp(-0.5 * pdf.x[i] * pdf.x[i]) / std::sqrt(2.0 * M_PI), 0.02) << pdf.x[i];
  double area = 0.0;
  for (std::size_t i = 1; i < pdf.x.size(); ++i) area += 0.5 * (pdf.y[i] + pdf.y[i - 1]) * (pdf.x[i] - pdf.x[i - 1]);
  EXPECT_NEAR(area, 1.0, 0.01);
  EXPECT_GT(pdf.bandwidth, 0.0);
}

TEST(TopQuantile, OneHotIsConstant) {
  MatrixXd theta = MatrixXd::Zero(12, 3);
  std::vector<int> years;
  for (int d = 0; d < 12; ++d) {
    theta(d, d % 3) = 1.0;
    years.push_back(2000 + d / 2);
  }
  const auto s = top_quantile_series(theta, years, 1);
  for (double v : s.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(TopQuantile, PolynomialMatchesVandermondeOracle) {
  std::vector<int> years;
  std::vector<double> values, linear;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 0.05);
  for (int y = 2000; y <= 2021; ++y) {
    years.push_back(y);
    const double x = y - 2000;
    values.push_back(0.4 + 0.01 * x - 0.001 * x * x + 0.00005 * x * x * x + n(rng));
    linear.push_back(0.3 + 0.02 * x);
  }
  const auto lin = polynomial_trend(years, linear, 1);
  for (double r : lin.residuals) EXPECT_NEAR(r, 0.0, 1e-12);

  const auto cubic = polynomial_trend(years, values, 3);
  MatrixXd V(static_cast<Eigen::Index>(years.size()), 4);
  Eigen::VectorXd yv(static_cast<Eigen::Index>(years.size()));
  for (std::size_t i = 0; i < years.size(); ++i) {
    const double x = years[i] - 2000;
    V.row(static_cast<Eigen::Index>(i)) << 1, x, x * x, x * x * x;
    yv(static_cast<Eigen::Index>(i)) = values[i];
  }
  const Eigen::VectorXd b = (V.transpose() * V).ldlt().solve(V.transpose() * yv);
  ASSERT_EQ(cubic.coefficients.size(), 4u);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(cubic.coefficients[static_cast<std::size_t>(j)], b(j), 1e-8);
}
