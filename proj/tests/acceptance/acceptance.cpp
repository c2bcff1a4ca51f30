// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any
// failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>

#include <fmt/core.h>

#include "generators.hpp"
#include "topictrend/citation_regression.hpp"
#include "topictrend/embeddings.hpp"
#include "topictrend/multivar.hpp"
#include "topictrend/pipeline.hpp"
#include "topictrend/table.hpp"
#include "topictrend/topic_model.hpp"
#include "topictrend/trend_series.hpp"

using namespace topictrend;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testsupport::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MatrixXd columns(const std::vector<double>& a, const std::vector<double>& b) {
  MatrixXd y(static_cast<Eigen::Index>(a.size()), 2);
  for (std::size_t t = 0; t < a.size(); ++t) y(static_cast<Eigen::Index>(t), 0) = a[t], y(static_cast<Eigen::Index>(t), 1) = b[t];
  return y;
}

Outcome newey_west() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  o.require(trend::newey_west_lag(22) == 2, fmt::format("T=22 gives {}", trend::newey_west_lag(22)));
  int mismatches = 0;
  for (int T = 1; T <= 500; ++T) {
    // Integer search for the largest n with n^(9/2) <= 4^(9/2) T/100, i.e.
    // n^9 * 100^2 <= 4^9 * T^2, avoiding the floating-point power entirely.
    long double rhs = std::pow(4.0L, 9) * static_cast<long double>(T) * T;
    int n = 0;
    while (std::pow(static_cast<long double>(n + 1), 9) * 10000.0L <= rhs) ++n;
    mismatches += trend::newey_west_lag(T) != n;
  }
  o.require(mismatches == 0, fmt::format("{} mismatches over T=1..500", mismatches));
  const double s = seconds_since(t0);
  o.require(s < 1.0, fmt::format("{:.3f}s", s));
  return o;
}

Outcome unit_root_size_power() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20211018);
  const int reps = 1000, T = 200;
  const int kpss_lag = trend::newey_west_lag(T);
  int adf_rw = 0, adf_ar = 0, kpss_wn = 0;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < reps; ++i) {
    adf_rw += trend::unit_root_test(testsupport::random_walk(rng, T), trend::UnitRootTest::ADF, trend::ModelType::Type2, 0)
                  .p_value.value < 0.05;
    adf_ar += trend::unit_root_test(testsupport::ar1(rng, T, 0.5), trend::UnitRootTest::ADF, trend::ModelType::Type2, 0)
                  .p_value.value < 0.05;
    std::vector<double> wn(T);
    for (auto& v : wn) v = n(rng);
    kpss_wn += trend::unit_root_test(wn, trend::UnitRootTest::KPSS, trend::ModelType::Type2, kpss_lag).p_value.value < 0.05;
  }
  const double size = adf_rw / double(reps), power = adf_ar / double(reps), ksize = kpss_wn / double(reps);
  o.require(size >= 0.03 && size <= 0.07, fmt::format("ADF size {:.3f}", size));
  o.require(power >= 0.90, fmt::format("ADF power {:.3f}", power));
  o.require(ksize >= 0.03 && ksize <= 0.07, fmt::format("KPSS size {:.3f}", ksize));
  const double s = seconds_since(t0);
  o.require(s < 60.0, fmt::format("{:.1f}s", s));
  return o;
}

Outcome ks_cross_check() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = trend::ks_dominance_p(0.35, 315, 462);
  const double raw = std::exp(-2.0 * 0.35 * 0.35 * 315.0 * 462.0 / (315.0 + 462.0));
  o.require(raw < 2.2e-16, fmt::format("asymptotic p {:.3g}", raw));
  o.require(r.p_floored && r.p_value <= 2.2e-16, fmt::format("reported p {} floored={}", r.p_value, r.p_floored));
  const double s = seconds_since(t0);
  o.require(s < 1.0, fmt::format("{:.3f}s", s));
  return o;
}

// Drifting random walk x and y = 2x + noise; the constant-case critical
// values assume drifting levels.
MatrixXd cointegrated_pair(Rng& rng, int T) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd y(T, 2);
  double x = 0.0;
  for (int t = 0; t < T; ++t) {
    x += 0.5 + n(rng);
    y(t, 0) = 2.0 * x + n(rng);
    y(t, 1) = x;
  }
  return y;
}

Outcome johansen() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto c3 = multivar::johansen_trace_critical(3, multivar::DetSpec::Constant);
  const auto c2 = multivar::johansen_trace_critical(2, multivar::DetSpec::Constant);
  const auto c1 = multivar::johansen_trace_critical(1, multivar::DetSpec::Constant);
  o.require(c3 && c2 && c1 && c3->first == 29.68 && c2->first == 15.41 && c1->first == 3.76,
            fmt::format("5% column ({}, {}, {})", c3 ? c3->first : NAN, c2 ? c2->first : NAN, c1 ? c1->first : NAN));
  Rng rng(7);
  int hit = 0;
  for (int s = 0; s < 200; ++s)
    hit += multivar::cointegration(multivar::make_series(cointegrated_pair(rng, 200)), multivar::CointMethod::Johansen, 2)
               .selected_rank == 1;
  o.require(hit >= 180, fmt::format("rank 1 in {}/200", hit));
  const double s = seconds_since(t0);
  o.require(s < 30.0, fmt::format("{:.1f}s", s));
  return o;
}

Outcome engle_granger() {
  Outcome o;
  const auto c = multivar::engle_granger_critical(3);
  o.require(c.one == -4.29 && c.five == -3.74 && c.ten == -3.45,
            fmt::format("critical ({}, {}, {})", c.one, c.five, c.ten));
  Rng rng(8);
  int keep = 0;
  for (int s = 0; s < 500; ++s) {
    const auto y = columns(testsupport::random_walk(rng, 200), testsupport::random_walk(rng, 200));
    const auto r = multivar::cointegration(multivar::make_series(y), multivar::CointMethod::EngleGranger, 0);
    keep += r.engle_granger->statistic > r.engle_granger->crit_5;
  }
  const double rate = keep / 500.0;
  o.require(std::abs(rate - 0.95) <= 0.03, fmt::format("non-rejection {:.3f}", rate));
  return o;
}

Outcome var_irf_fevd() {
  Outcome o;
  Rng rng(1);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int k = 2 + inst % 3, p = 1 + inst % 3;
    const auto A = testsupport::random_stable_var(rng, k, p);
    const MatrixXd y = testsupport::simulate_var(rng, A, 150, VectorXd::Constant(k, 0.1), MatrixXd::Identity(k, k));
    const auto m = multivar::fit_var(multivar::make_series(y), p);
    // Oracle: each equation solved separately by QR on the stacked regressors.
    const auto T = y.rows();
    MatrixXd X(T - p, 1 + k * p);
    for (Eigen::Index t = p; t < T; ++t) {
      X(t - p, 0) = 1.0;
      for (int l = 1; l <= p; ++l) X.block(t - p, 1 + (l - 1) * k, 1, k) = y.row(t - l);
    }
    for (int j = 0; j < k; ++j) {
      const VectorXd b = X.colPivHouseholderQr().solve(y.col(j).tail(T - p));
      worst = std::max(worst, std::abs(m.intercept(j) - b(0)));
      for (int l = 0; l < p; ++l)
        for (int i = 0; i < k; ++i)
          worst = std::max(worst, std::abs(m.coefs[static_cast<std::size_t>(l)](j, i) - b(1 + l * k + i)));
    }
    const auto f = multivar::fevd(m, 10);
    for (const auto& s : f.share)
      for (int i = 0; i < k; ++i) {
        const double dev = std::abs(s.row(i).sum() - 1.0);
        if (dev > 1e-8) o.require(false, fmt::format("FEVD row sum off by {:.2e}", dev));
      }
  }
  o.require(worst <= 1e-8, fmt::format("max LS deviation {:.2e}", worst));

  MatrixXd A(2, 2);
  A << 0.7, 0.0, 0.0, -0.4;
  auto m = multivar::fit_var(
      multivar::make_series(testsupport::simulate_var(rng, {A}, 300, VectorXd::Zero(2), MatrixXd::Identity(2, 2))), 1);
  m.coefs[0] = A;
  m.sigma_u = MatrixXd::Identity(2, 2);
  const auto ir = multivar::impulse_response(m, 10, false);
  double irf_err = 0.0;
  for (int h = 0; h <= 10; ++h) {
    MatrixXd expect = MatrixXd::Zero(2, 2);
    expect(0, 0) = std::pow(0.7, h);
    expect(1, 1) = std::pow(-0.4, h);
    irf_err = std::max(irf_err, (ir.response[static_cast<std::size_t>(h)] - expect).cwiseAbs().maxCoeff());
  }
  o.require(irf_err <= 1e-10, fmt::format("IRF a^h deviation {:.2e}", irf_err));
  return o;
}

Outcome granger() {
  Outcome o;
  Rng rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  int size_rej = 0, power_rej = 0;
  const int reps = 1000;
  for (int s = 0; s < reps; ++s) {
    const auto g0 = multivar::granger_wald(multivar::make_series(testsupport::white_noise(rng, 200, 2), {"a", "b"}), 2, 1);
    size_rej += g0.rows[0].p_value < 0.05;
  }
  for (int s = 0; s < 200; ++s) {
    MatrixXd y(500, 2);
    double xprev = 0.0;
    for (int t = 0; t < 500; ++t) {
      y(t, 1) = n(rng);
      y(t, 0) = 0.5 * xprev + n(rng);
      xprev = y(t, 1);
    }
    for (const auto& row : multivar::granger_wald(multivar::make_series(y, {"y", "x"}), 2, 1).rows)
      if (row.equation == "y" && row.excluded == "x") power_rej += row.p_value < 0.05;
  }
  const double size = size_rej / double(reps), power = power_rej / 200.0;
  o.require(size >= 0.03 && size <= 0.07, fmt::format("size {:.3f}", size));
  o.require(power >= 0.99, fmt::format("power {:.3f}", power));
  const auto g = multivar::granger_wald(multivar::make_series(testsupport::white_noise(rng, 100, 3)), 2, 1);
  bool df_ok = true;
  for (const auto& row : g.rows)
    if (row.excluded != "ALL") df_ok &= row.df == 3;
  o.require(df_ok, "df 3 for p=2, d_max=1");
  return o;
}

Outcome topic_recovery() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto c = testsupport::disjoint_topic_corpus(seed, 2, 200);
    topics::FitOptions opts;
    opts.seed = seed;
    const auto f = topics::fit(c.corpus, topics::intercept_only_design(200), 2, opts);
    const double tv = testsupport::aligned_total_variation(c.beta, f.beta);
    bool monotone = true;
    for (std::size_t i = 1; i < f.bound_trace.size(); ++i) monotone &= f.bound_trace[i] >= f.bound_trace[i - 1] - 1e-8;
    double rows = 0.0;
    for (Eigen::Index r = 0; r < f.beta.rows(); ++r) rows = std::max(rows, std::abs(f.beta.row(r).sum() - 1.0));
    for (Eigen::Index r = 0; r < f.theta.rows(); ++r) rows = std::max(rows, std::abs(f.theta.row(r).sum() - 1.0));
    o.require(tv <= 0.1, fmt::format("seed {} TV {:.4f}", seed, tv));
    o.require(monotone, fmt::format("seed {} bound non-decreasing over {} iterations", seed, f.bound_trace.size()));
    o.require(rows <= 1e-8, fmt::format("seed {} row sums within {:.1e}", seed, rows));
  }
  const double s = seconds_since(t0);
  o.require(s < 120.0, fmt::format("{:.1f}s", s));
  return o;
}

Outcome ser_arithmetic() {
  Outcome o;
  const auto r = topics::assemble_k_report({{5, -100.0, 10.0}, {6, -80.0, 10.0}, {7, -90.0, 10.0}});
  o.require(r.rows[1].ser == -8.0, fmt::format("SER(-80,10) = {}", r.rows[1].ser));
  o.require(r.rows[1].delta_ser && *r.rows[1].delta_ser == 2.0, "delta SER 2");
  o.require(r.rows[1].weighted_delta_ser && *r.rows[1].weighted_delta_ser == -0.25,
            fmt::format("wSER {}", r.rows[1].weighted_delta_ser.value_or(NAN)));
  o.require(r.rows[1].improvement && !r.rows[2].improvement, "wSER < 0 flags only the improving K");
  return o;
}

std::vector<citation::CitationRow> citation_rows(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> share(0.01, 0.6);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::uniform_int_distribution<int> author(0, 29), year(2005, 2014), journal(0, 3);
  std::bernoulli_distribution oa(0.3), zero(0.1);
  std::vector<citation::CitationRow> rows;
  for (int i = 0; i < 600; ++i) {
    citation::CitationRow r;
    r.topic_prevalence = share(rng);
    r.open_access = oa(rng);
    r.author = "A" + std::to_string(author(rng));
    r.year = year(rng);
    r.journal = "J" + std::to_string(journal(rng));
    r.years_since_pub = citation::years_since_publication(r.year, 2021);
    r.citations = zero(rng) ? 0.0 : std::round(std::exp(2.0 - 0.1 * std::log(r.topic_prevalence) + noise(rng)));
    rows.push_back(r);
  }
  return rows;
}

Outcome citation_checks() {
  Outcome o;
  const auto rows = citation_rows(3);
  double worst = 0.0;
  for (auto t : {citation::Transform::IHS, citation::Transform::Log1pCY, citation::Transform::LogCY}) {
    citation::RegressionOptions opts;
    opts.transform = t;
    const auto a = citation::fit_citation_model(rows, opts), b = citation::fit_citation_model_dummies(rows, opts);
    for (std::size_t i = 0; i < a.coefficients.size(); ++i) {
      worst = std::max(worst, std::abs(a.coefficients[i].estimate - b.coefficients[i].estimate));
      worst = std::max(worst, std::abs(a.coefficients[i].std_error - b.coefficients[i].std_error));
    }
  }
  o.require(worst <= 1e-8, fmt::format("within vs dummies {:.2e}", worst));
  const double z = *citation::transform_citations(0.0, 4.0, citation::Transform::IHS);
  const double l2 = *citation::transform_citations(3.0, 4.0, citation::Transform::IHS);
  o.require(z == 0.0 && std::abs(l2 - std::log(2.0)) <= 1e-15, fmt::format("IHS(0)={} IHS(0.75)-log2={:.1e}", z, l2 - std::log(2.0)));
  int zeros = 0;
  for (const auto& r : rows) zeros += r.citations == 0.0;
  citation::RegressionOptions opts;
  opts.transform = citation::Transform::LogCY;
  const auto f = citation::fit_citation_model(rows, opts);
  o.require(f.dropped == zeros && f.n == static_cast<int>(rows.size()) - zeros,
            fmt::format("LogCY dropped {} of {} zero rows", f.dropped, zeros));
  return o;
}

Outcome embedding_checks() {
  Outcome o;
  const auto base = testsupport::disjoint_topic_corpus(5, 2, 60, 40, 25);
  embed::TrainOptions dim_opts;
  dim_opts.dim = 50;
  dim_opts.iterations = 2;
  o.require(embed::train_pvdbow(base.corpus, dim_opts).doc_vectors.cols() == 50, "dim 50");

  // One year holds six documents from two overlapping vocabularies plus an
  // exact copy of the first; the copy must be its closest within-year peer.
  auto mixed = testsupport::disjoint_topic_corpus(6, 2, 6, 60, 30, 0.5);
  std::vector<std::pair<std::string, std::vector<std::string>>> docs;
  for (std::size_t d = 0; d < mixed.corpus.num_docs(); ++d) {
    std::vector<std::string> words;
    for (const auto& e : mixed.corpus.counts[d])
      for (int c = 0; c < e.count; ++c) words.push_back(mixed.corpus.vocabulary[static_cast<std::size_t>(e.term)]);
    docs.emplace_back(mixed.corpus.doc_ids[d], words);
  }
  docs.emplace_back("copy", docs.front().second);
  const auto corpus = corpus::build_matrix(docs);
  const auto D = static_cast<Eigen::Index>(corpus.num_docs());
  const auto copy = D - 1;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    embed::TrainOptions t;
    t.dim = 50;
    t.iterations = 30;
    t.seed = seed;
    MatrixXd v = embed::train_pvdbow(corpus, t).doc_vectors;
    v.rowwise().normalize();
    const double dup = v.row(0).dot(v.row(copy));
    bool best = true;
    for (Eigen::Index i = 0; i < D; ++i)
      for (Eigen::Index j = i + 1; j < D; ++j)
        if (!(i == 0 && j == copy)) best &= v.row(i).dot(v.row(j)) < dup;
    wins += best;
  }
  o.require(wins == 10, fmt::format("copy closest in {}/10 seeds", wins));

  MatrixXd same(2, 4);
  same << 1, 2, 3, 4, 1, 2, 3, 4;
  const std::vector<int> two{2010, 2010};
  o.require(std::abs(embed::similarity_series(same, two).points[0].value - 1.0) <= 1e-6, "identical vectors score 1");

  Rng rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd v(40, 9);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = n(rng);
  std::vector<int> years;
  for (int i = 0; i < 40; ++i) years.push_back(2000 + i % 4);
  const auto s = embed::similarity_series(v, years);
  MatrixXd u = v;
  u.rowwise().normalize();
  double worst = 0.0;
  for (int y = 0; y < 4; ++y) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < 40; ++i)
      if (years[static_cast<std::size_t>(i)] == 2000 + y) idx.push_back(i);
    double total = 0.0;
    for (auto i : idx) {
      double acc = 0.0;
      for (auto j : idx)
        if (j != i) acc += u.row(i).dot(u.row(j));
      total += acc / static_cast<double>(idx.size() - 1);
    }
    worst = std::max(worst, std::abs(s.points[static_cast<std::size_t>(y)].value - total / static_cast<double>(idx.size())));
  }
  o.require(worst <= 1e-12, fmt::format("brute force deviation {:.1e}", worst));
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg_path = std::filesystem::path(TOPICTREND_SOURCE_DIR) / "data" / "synthetic" / "config.json";
  std::string manifests[2];
  for (int i = 0; i < 2; ++i) {
    auto c = pipeline::load_config(cfg_path);
    c.output = testsupport::scratch_dir("acceptance_run" + std::to_string(i));
    pipeline::run(c);
    manifests[i] = read_text_file(c.output / "manifest.json");
  }
  o.require(!manifests[0].empty() && manifests[0] == manifests[1],
            fmt::format("manifest sha256 {} vs {}", pipeline::sha256_hex(manifests[0]).substr(0, 12),
                        pipeline::sha256_hex(manifests[1]).substr(0, 12)));
  const double s = seconds_since(t0);
  o.require(s < 300.0, fmt::format("{:.1f}s", s));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Newey-West lag rule", newey_west},
      {"unit-root size and power", unit_root_size_power},
      {"KS dominance p-value floor", ks_cross_check},
      {"Johansen critical values and rank detection", johansen},
      {"Engle-Granger critical values and size", engle_granger},
      {"VAR least squares, IRF closed form, FEVD sums", var_irf_fevd},
      {"Granger-Wald size, power and df", granger},
      {"topic recovery", topic_recovery},
      {"SER arithmetic", ser_arithmetic},
      {"citation regression", citation_checks},
      {"embedding sanity", embedding_checks},
      {"end-to-end determinism", end_to_end},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
