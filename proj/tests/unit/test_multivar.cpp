#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "topictrend/error.hpp"
#include "topictrend/multivar.hpp"

using namespace topictrend;
using namespace topictrend::multivar;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testsupport::Rng;

namespace {

MatrixXd chol2(double s1, double s2, double rho) {
  MatrixXd S(2, 2);
  S << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
  return S.llt().matrixL();
}

// Per-equation least squares through explicit normal equations.
MatrixXd oracle_coefficients(const MatrixXd& y, int p) {
  const auto T = y.rows(), k = y.cols();
  MatrixXd X(T - p, 1 + k * p);
  for (Eigen::Index t = p; t < T; ++t) {
    X(t - p, 0) = 1.0;
    for (int l = 1; l <= p; ++l) X.block(t - p, 1 + (l - 1) * k, 1, k) = y.row(t - l);
  }
  const MatrixXd Y = y.bottomRows(T - p);
  MatrixXd B(1 + k * p, k);
  const MatrixXd xtx = X.transpose() * X;
  for (Eigen::Index j = 0; j < k; ++j) B.col(j) = xtx.ldlt().solve(X.transpose() * Y.col(j));
  return B;
}

// x is a random walk with optional drift; y0 = slope * x + noise.
MatrixXd cointegrated_pair(Rng& rng, int T, double slope, double noise_sd, double drift = 0.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd y(T, 2);
  double x = 0.0;
  for (int t = 0; t < T; ++t) {
    x += drift + n(rng);
    y(t, 0) = slope * x + noise_sd * n(rng);
    y(t, 1) = x;
  }
  return y;
}

}  // namespace

TEST(Var, MatchesLeastSquaresOracle) {
  Rng rng(1);
  for (int inst = 0; inst < 20; ++inst) {
    const int k = 2 + inst % 3, p = 1 + inst % 3;
    const auto A = testsupport::random_stable_var(rng, k, p);
    const MatrixXd y =
        testsupport::simulate_var(rng, A, 150, VectorXd::Constant(k, 0.1), MatrixXd::Identity(k, k));
    const auto m = fit_var(make_series(y), p);
    const MatrixXd B = oracle_coefficients(y, p);
    for (int j = 0; j < k; ++j) {
      EXPECT_NEAR(m.intercept(j), B(0, j), 1e-8);
      for (int l = 0; l < p; ++l)
        for (int i = 0; i < k; ++i)
          EXPECT_NEAR(m.coefs[static_cast<std::size_t>(l)](j, i), B(1 + l * k + i, j), 1e-8);
    }
  }
}

TEST(Var, NoiselessRecovery) {
  MatrixXd A(2, 2);
  A << 0.6, -0.5, 0.5, 0.6;
  MatrixXd y(40, 2);
  y.row(0) << 3.0, -1.0;
  for (int t = 1; t < 40; ++t) y.row(t) = (VectorXd::Constant(2, 0.2) + A * y.row(t - 1).transpose()).transpose();
  const auto m = fit_var(make_series(y), 1);
  EXPECT_LT((m.coefs[0] - A).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((m.intercept - VectorXd::Constant(2, 0.2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Var, WhiteNoiseTRatiosSmall) {
  Rng rng(2);
  int ok = 0;
  for (int s = 0; s < 100; ++s) {
    const auto m = fit_var(make_series(testsupport::white_noise(rng, 200, 2)), 1);
    bool all = true;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) all &= std::abs(m.coefs[0](j, i) / m.coef_std_errors(j, 1 + i)) < 3.0;
    ok += all;
  }
  EXPECT_GE(ok, 95);
}

TEST(Var, StabilityAndCompanion) {
  MatrixXd A(2, 2);
  A << 0.5, 0.0, 0.0, -0.3;
  const auto ev = companion_eigenvalues({A});
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0].modulus, 0.5, 1e-12);
  EXPECT_NEAR(ev[1].modulus, 0.3, 1e-12);
}

TEST(LagSelection, WhiteNoisePicksZero) {
  Rng rng(3);
  int zero = 0;
  for (int s = 0; s < 100; ++s) zero += select_lag(make_series(testsupport::white_noise(rng, 500, 2)), 4).sbic_winner == 0;
  EXPECT_GE(zero, 90);
}

TEST(LagSelection, StrongSecondLag) {
  Rng rng(4);
  MatrixXd A1 = MatrixXd::Zero(2, 2), A2(2, 2);
  A2 << 0.6, 0.1, -0.1, 0.5;
  int two_aic = 0, two_fpe = 0;
  for (int s = 0; s < 100; ++s) {
    const auto y = testsupport::simulate_var(rng, {A1, A2}, 200, VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    const auto sel = select_lag(make_series(y), 4);
    two_aic += sel.aic_winner == 2;
    two_fpe += sel.fpe_winner == 2;
  }
  EXPECT_GE(two_aic, 90);
  EXPECT_GE(two_fpe, 90);
}

TEST(LagSelection, TooManyLagsRejected) {
  Rng rng(5);
  EXPECT_THROW(select_lag(make_series(testsupport::white_noise(rng, 10, 3)), 4), ValidationError);
}

TEST(Johansen, CriticalValueLookup) {
  const auto c3 = johansen_trace_critical(3, DetSpec::Constant);
  const auto c2 = johansen_trace_critical(2, DetSpec::Constant);
  const auto c1 = johansen_trace_critical(1, DetSpec::Constant);
  EXPECT_DOUBLE_EQ(c3->first, 29.68);
  EXPECT_DOUBLE_EQ(c2->first, 15.41);
  EXPECT_DOUBLE_EQ(c1->first, 3.76);
  EXPECT_DOUBLE_EQ(c3->second, 35.65);
  EXPECT_TRUE(johansen_trace_critical(2, DetSpec::None).has_value());
}

TEST(Johansen, DetectsCointegratedPair) {
  Rng rng(6);
  int hit = 0;
  // The tabulated critical values assume drifting levels.
  for (int s = 0; s < 60; ++s) {
    const auto r = cointegration(make_series(cointegrated_pair(rng, 500, 2.0, 1.0, 0.5)), CointMethod::Johansen, 2);
    hit += r.selected_rank == 1;
  }
  EXPECT_GE(hit, 54);
}

TEST(Johansen, ParameterCountsAndLikelihoodOrder) {
  Rng rng(7);
  const auto r = cointegration(make_series(cointegrated_pair(rng, 300, 2.0, 1.0)), CointMethod::Johansen, 2);
  ASSERT_EQ(r.johansen.size(), 3u);
  const int K = 2, p = 2;
  for (const auto& row : r.johansen) {
    EXPECT_EQ(row.parameters, K * K * (p - 1) + K + row.rank * (2 * K - row.rank));
    if (row.trace) EXPECT_NEAR(*row.trace, 2.0 * (r.johansen.back().log_likelihood - row.log_likelihood), 1e-8);
  }
}

TEST(EngleGranger, CriticalValues) {
  const auto c = engle_granger_critical(3);
  EXPECT_DOUBLE_EQ(c.one, -4.29);
  EXPECT_DOUBLE_EQ(c.five, -3.74);
  EXPECT_DOUBLE_EQ(c.ten, -3.45);
  EXPECT_THROW(engle_granger_critical(7), ValidationError);
}

TEST(EngleGranger, SizeOnIndependentWalks) {
  Rng rng(8);
  int keep = 0;
  const int reps = 200;
  for (int s = 0; s < reps; ++s) {
    MatrixXd y(200, 2);
    const auto a = testsupport::random_walk(rng, 200), b = testsupport::random_walk(rng, 200);
    for (int t = 0; t < 200; ++t) y(t, 0) = a[static_cast<std::size_t>(t)], y(t, 1) = b[static_cast<std::size_t>(t)];
    const auto r = cointegration(make_series(y), CointMethod::EngleGranger, 0);
    keep += r.engle_granger->statistic > r.engle_granger->crit_5;
  }
  EXPECT_NEAR(keep / double(reps), 0.95, 0.04);
}

TEST(Vecm, RankZeroIsDifferencedVar) {
  Rng rng(9);
  const MatrixXd y = cointegrated_pair(rng, 200, 1.0, 3.0);
  const auto v = fit_vecm(make_series(y), 3, 0);
  const MatrixXd dy = y.bottomRows(199) - y.topRows(199);
  const auto d = fit_var(make_series(dy), 2);
  for (int i = 0; i < 2; ++i) EXPECT_LT((v.gamma[static_cast<std::size_t>(i)] - d.coefs[static_cast<std::size_t>(i)]).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((v.intercept - d.intercept).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Vecm, NoiselessPairGivesProportionalBeta) {
  Rng rng(10);
  MatrixXd y = cointegrated_pair(rng, 200, 2.0, 0.0);
  // A tiny perturbation keeps the residual covariance non-singular.
  std::normal_distribution<double> n(0.0, 1e-6);
  for (int t = 0; t < 200; ++t) y(t, 0) += n(rng);
  const auto v = fit_vecm(make_series(y), 2, 1);
  EXPECT_NEAR(v.beta(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(v.beta(1, 0), -2.0, 1e-4);
}

TEST(Vecm, UnitModuliCount) {
  Rng rng(11);
  const auto y = cointegrated_pair(rng, 300, 2.0, 1.0);
  for (int r = 0; r < 2; ++r) EXPECT_EQ(fit_vecm(make_series(y), 2, r).unit_root_count(1e-6), 2 - r);
  EXPECT_THROW(fit_vecm(make_series(y), 2, 2), ValidationError);
}

TEST(Granger, SizePowerAndDf) {
  Rng rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  int size_rej = 0, power_rej = 0, reverse_rej = 0;
  const int reps = 200;
  for (int s = 0; s < reps; ++s) {
    const auto g0 = granger_wald(make_series(testsupport::white_noise(rng, 500, 2), {"a", "b"}), 2, 1);
    size_rej += g0.rows[0].p_value < 0.05;
    MatrixXd y(500, 2);
    double xprev = 0.0;
    for (int t = 0; t < 500; ++t) {
      y(t, 1) = n(rng);
      y(t, 0) = 0.8 * xprev + n(rng);
      xprev = y(t, 1);
    }
    const auto g = granger_wald(make_series(y, {"y", "x"}), 2, 1);
    for (const auto& row : g.rows) {
      if (row.equation == "y" && row.excluded == "x") power_rej += row.p_value < 0.05;
      if (row.equation == "x" && row.excluded == "y") reverse_rej += row.p_value < 0.05;
    }
  }
  EXPECT_NEAR(size_rej / double(reps), 0.05, 0.035);
  EXPECT_GE(power_rej / double(reps), 0.99);
  EXPECT_LT(reverse_rej / double(reps), 0.1);

  const auto g = granger_wald(make_series(testsupport::white_noise(rng, 100, 3), {"rules", "markets", "external"}), 2, 1);
  ASSERT_EQ(g.rows.size(), 3u * 3u);
  for (const auto& row : g.rows) EXPECT_EQ(row.df, row.excluded == "ALL" ? 2 * 3 : 3);
  const auto strict = granger_wald(make_series(testsupport::white_noise(rng, 100, 2)), 2, 1, GrangerMode::StrictTodaYamamoto);
  EXPECT_EQ(strict.rows[0].df, 2);
}

TEST(Irf, DiagonalVarClosedForm) {
  MatrixXd A(2, 2);
  A << 0.7, 0.0, 0.0, -0.4;
  VarModel m;
  Rng rng(13);
  const auto y = testsupport::simulate_var(rng, {A}, 400, VectorXd::Zero(2), MatrixXd::Identity(2, 2));
  m = fit_var(make_series(y), 1);
  m.coefs[0] = A;
  m.sigma_u = MatrixXd::Identity(2, 2);
  const auto ir = impulse_response(m, 8, false);
  for (int h = 0; h <= 8; ++h) {
    EXPECT_NEAR(ir.response[static_cast<std::size_t>(h)](0, 0), std::pow(0.7, h), 1e-10);
    EXPECT_NEAR(ir.response[static_cast<std::size_t>(h)](1, 1), std::pow(-0.4, h), 1e-10);
    EXPECT_NEAR(ir.response[static_cast<std::size_t>(h)](0, 1), 0.0, 1e-10);
    EXPECT_NEAR(ir.response[static_cast<std::size_t>(h)](1, 0), 0.0, 1e-10);
  }
}

TEST(Irf, VecmBandsRefused) {
  Rng rng(14);
  const auto v = fit_vecm(make_series(cointegrated_pair(rng, 200, 2.0, 1.0)), 2, 1);
  const auto ir = impulse_response(v, 5, true, Bootstrap{50, 0.95, 1});
  EXPECT_TRUE(ir.bands_refused);
  EXPECT_FALSE(ir.lower.has_value());
  EXPECT_FALSE(ir.note.empty());
  EXPECT_EQ(ir.response.size(), 6u);
}

TEST(Irf, BootstrapCoverage) {
  Rng rng(15);
  MatrixXd A(2, 2);
  A << 0.5, 0.1, 0.0, 0.3;
  const MatrixXd L = chol2(1.0, 1.0, 0.0);
  const auto truth = ma_coefficients({A}, 2, 4);
  int covered = 0, total = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const auto y = testsupport::simulate_var(rng, {A}, 500, VectorXd::Zero(2), L);
    const auto m = fit_var(make_series(y), 1);
    const auto ir = impulse_response(m, 4, false, Bootstrap{200, 0.95, static_cast<std::uint64_t>(rep + 1)});
    for (int h = 1; h <= 4; ++h) {
      const auto hh = static_cast<std::size_t>(h);
      covered += truth[hh](0, 0) >= (*ir.lower)[hh](0, 0) && truth[hh](0, 0) <= (*ir.upper)[hh](0, 0);
      ++total;
    }
  }
  EXPECT_NEAR(covered / double(total), 0.95, 0.07);
}

TEST(Fevd, DiagonalSystemIsDecoupled) {
  Rng rng(16);
  MatrixXd A(2, 2);
  A << 0.5, 0.0, 0.0, 0.2;
  auto m = fit_var(make_series(testsupport::simulate_var(rng, {A}, 200, VectorXd::Zero(2), MatrixXd::Identity(2, 2))), 1);
  m.coefs[0] = A;
  m.sigma_u = MatrixXd::Identity(2, 2);
  const auto f = fevd(m, 6);
  for (const auto& s : f.share) {
    EXPECT_NEAR(s(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(s(1, 1), 1.0, 1e-12);
    EXPECT_NEAR(s(0, 1), 0.0, 1e-12);
  }
}

TEST(Fevd, LastShockAbsentEarlyAndSharesSumToOne) {
  Rng rng(17);
  for (int inst = 0; inst < 20; ++inst) {
    const auto A = testsupport::random_stable_var(rng, 3, 2);
    const auto y = testsupport::simulate_var(rng, A, 120, VectorXd::Zero(3), MatrixXd::Identity(3, 3));
    const auto f = fevd(fit_var(make_series(y), 2), 8);
    EXPECT_NEAR(f.share[0](0, 2), 0.0, 1e-12);
    EXPECT_NEAR(f.share[1](0, 2), 0.0, 1e-12);
    for (const auto& s : f.share)
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.row(i).sum(), 1.0, 1e-8);
  }
}

TEST(Fevd, BootstrapBandsPopulated) {
  Rng rng(18);
  const auto A = testsupport::random_stable_var(rng, 2, 1);
  const auto y = testsupport::simulate_var(rng, A, 150, VectorXd::Zero(2), MatrixXd::Identity(2, 2));
  const auto f = fevd(fit_var(make_series(y), 1), 5, Bootstrap{50, 0.9, 3});
  ASSERT_TRUE(f.lower && f.upper && f.std_error);
  for (std::size_t s = 0; s < f.share.size(); ++s)
    EXPECT_TRUE(((*f.lower)[s].array() <= (*f.upper)[s].array() + 1e-12).all());
}

TEST(Diagnostics, JarqueBeraSize) {
  Rng rng(19);
  int ok = 0;
  for (int s = 0; s < 100; ++s) ok += normality(testsupport::white_noise(rng, 10000, 2)).joint_jb_p > 0.01;
  EXPECT_GE(ok, 98);
}

TEST(Diagnostics, SymmetricResidualsHaveNoSkew) {
  Rng rng(20);
  const MatrixXd half = testsupport::white_noise(rng, 500000, 1);
  MatrixXd r(1000000, 1);
  r << half, -half;
  EXPECT_LT(std::abs(normality(r).equations[0].skewness), 0.05);
}

TEST(Diagnostics, LmDegreesOfFreedom) {
  Rng rng(21);
  const auto m = fit_var(make_series(testsupport::white_noise(rng, 100, 3)), 2);
  const auto d = diagnostics(m);
  ASSERT_EQ(d.lm.size(), 2u);
  for (const auto& row : d.lm) EXPECT_EQ(row.df, 9);
  EXPECT_TRUE(d.stable);
}
