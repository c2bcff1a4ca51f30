#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "detail/json_eigen.hpp"
#include "topictrend/error.hpp"
#include "topictrend/linalg.hpp"
#include "topictrend/random.hpp"
#include "topictrend/stats.hpp"
#include "topictrend/table.hpp"
#include "topictrend/topic_model.hpp"

namespace topictrend::topics {

namespace {

std::vector<int> rank_row(const Eigen::RowVectorXd& score, int n) {
  std::vector<int> idx(static_cast<std::size_t>(score.size()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto take = static_cast<std::size_t>(std::min<Eigen::Index>(n, score.size()));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(), [&](int a, int b) {
    return score(a) > score(b) || (score(a) == score(b) && a < b);
  });
  idx.resize(take);
  return idx;
}

// Fraction of entries of `row` that are <= each entry.
Eigen::RowVectorXd ecdf_row(const Eigen::RowVectorXd& row) {
  const Eigen::Index V = row.size();
  std::vector<double> sorted(row.data(), row.data() + V);
  std::sort(sorted.begin(), sorted.end());
  Eigen::RowVectorXd out(V);
  for (Eigen::Index v = 0; v < V; ++v) {
    const auto le = std::upper_bound(sorted.begin(), sorted.end(), row(v)) - sorted.begin();
    out(v) = static_cast<double>(le) / static_cast<double>(V);
  }
  return out;
}

}  // namespace

MatrixXd exclusivity_shares(const MatrixXd& beta) {
  MatrixXd out = beta;
  for (Eigen::Index v = 0; v < beta.cols(); ++v) {
    const double s = beta.col(v).sum();
    out.col(v) = s > 0.0 ? VectorXd(beta.col(v) / s) : VectorXd::Constant(beta.rows(), 1.0 / beta.rows());
  }
  return out;
}

MatrixXd frex_scores(const MatrixXd& beta, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("frex weight must lie in [0, 1]");
  const MatrixXd ex = exclusivity_shares(beta);
  MatrixXd out(beta.rows(), beta.cols());
  for (Eigen::Index k = 0; k < beta.rows(); ++k) {
    const Eigen::RowVectorXd fe = ecdf_row(ex.row(k));
    const Eigen::RowVectorXd ff = ecdf_row(beta.row(k));
    out.row(k) = (w / fe.array() + (1.0 - w) / ff.array()).inverse().matrix();
  }
  return out;
}

std::vector<std::vector<int>> top_words(const MatrixXd& beta, int n, RankMetric metric, double w) {
  if (n < 1) throw ValidationError("top_words: n must be positive");
  const MatrixXd score = metric == RankMetric::Frex ? frex_scores(beta, w) : beta;
  std::vector<std::vector<int>> out;
  for (Eigen::Index k = 0; k < beta.rows(); ++k) out.push_back(rank_row(score.row(k), n));
  return out;
}

TopicQuality coherence_exclusivity(const MatrixXd& beta, const corpus::ProcessedCorpus& corpus, int M) {
  if (beta.cols() != static_cast<Eigen::Index>(corpus.num_terms()))
    throw ValidationError("coherence: beta and corpus vocabularies differ");
  const auto top = top_words(beta, M, RankMetric::HighestProb);
  const MatrixXd ex = exclusivity_shares(beta);

  // Documents containing each word, sorted.
  std::vector<std::vector<int>> docs_of(corpus.num_terms());
  for (std::size_t d = 0; d < corpus.num_docs(); ++d)
    for (const auto& e : corpus.counts[d]) docs_of[static_cast<std::size_t>(e.term)].push_back(static_cast<int>(d));
  auto co_docs = [&](int a, int b) {
    const auto& x = docs_of[static_cast<std::size_t>(a)];
    const auto& y = docs_of[static_cast<std::size_t>(b)];
    std::size_t i = 0, j = 0, n = 0;
    while (i < x.size() && j < y.size()) {
      if (x[i] < y[j]) ++i;
      else if (y[j] < x[i]) ++j;
      else {
        ++n;
        ++i;
        ++j;
      }
    }
    return static_cast<double>(n);
  };

  TopicQuality q;
  for (std::size_t k = 0; k < top.size(); ++k) {
    const auto& words = top[k];
    double sc = 0.0;
    for (std::size_t m = 1; m < words.size(); ++m) {
      for (std::size_t l = 0; l < m; ++l) {
        const auto dl = static_cast<double>(docs_of[static_cast<std::size_t>(words[l])].size());
        if (dl == 0.0) throw NumericalError("coherence: top word absent from every document");
        sc += std::log((co_docs(words[m], words[l]) + 1.0) / dl);
      }
    }
    double exs = 0.0;
    for (int v : words) exs += ex(static_cast<Eigen::Index>(k), v);
    q.coherence.push_back(sc);
    q.exclusivity.push_back(exs / static_cast<double>(words.size()));
  }
  q.mean_coherence = stats::mean(q.coherence);
  q.mean_exclusivity = stats::mean(q.exclusivity);
  return q;
}

KSelectionReport assemble_k_report(const std::vector<std::tuple<int, double, double>>& k_sc_ex) {
  KSelectionReport report;
  for (std::size_t i = 0; i < k_sc_ex.size(); ++i) {
    const auto [K, sc, ex] = k_sc_ex[i];
    if (i > 0 && K <= std::get<0>(k_sc_ex[i - 1])) throw ValidationError("k report: K values must increase");
    if (ex == 0.0) throw NumericalError(fmt::format("k report: zero exclusivity at K = {}", K));
    KSelectionRow row;
    row.K = K;
    row.coherence = sc;
    row.exclusivity = ex;
    row.ser = sc / ex;
    if (i > 0) {
      row.delta_ser = row.ser - report.rows.back().ser;
      row.weighted_delta_ser = *row.delta_ser / row.ser;
      row.improvement = *row.weighted_delta_ser < 0.0;
    }
    report.rows.push_back(row);
  }
  KSelectionRow* best = nullptr;
  for (auto& row : report.rows)
    if (row.improvement && (best == nullptr || row.coherence > best->coherence)) best = &row;
  if (best != nullptr) {
    best->highlight = true;
    report.highlighted_k = best->K;
  }
  return report;
}

KSelectionReport k_scan(const corpus::ProcessedCorpus& corpus, const CovariateDesign& design,
                        const KScanOptions& opts) {
  if (opts.k_min < 2 || opts.k_max < opts.k_min) throw ValidationError("k_scan: need 2 <= k_min <= k_max");
  const int n = opts.k_max - opts.k_min + 1;
  std::vector<std::tuple<int, double, double>> triples(static_cast<std::size_t>(n));
  std::vector<int> iterations(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));

  auto work = [&](int i) {
    try {
      const int K = opts.k_min + i;
      const auto f = fit(corpus, design, K, opts.fit);
      const auto q = coherence_exclusivity(f.beta, corpus, opts.coherence_top_words);
      triples[static_cast<std::size_t>(i)] = {K, q.mean_coherence, q.mean_exclusivity};
      iterations[static_cast<std::size_t>(i)] = f.iterations_used;
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  const int threads = std::clamp(opts.threads, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int i = t; i < n; i += threads) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  auto report = assemble_k_report(triples);
  for (std::size_t i = 0; i < report.rows.size(); ++i) report.rows[i].iterations_used = iterations[i];
  return report;
}

namespace {

Eigen::Index covariate_column(const CovariateDesign& design, const std::string& covariate) {
  if (covariate == "(Intercept)") return 0;
  const auto it = std::find(design.names.begin(), design.names.end(), covariate);
  if (it == design.names.end()) throw ValidationError(fmt::format("unknown covariate '{}'", covariate));
  return 1 + (it - design.names.begin());
}

MatrixXd with_intercept(const CovariateDesign& design) {
  MatrixXd x(design.rows.rows(), design.rows.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(design.rows.cols()) = design.rows;
  return x;
}

}  // namespace

std::vector<EffectEstimate> estimate_effect(const MatrixXd& theta, const CovariateDesign& design,
                                            const std::string& covariate, double level) {
  if (theta.rows() != design.rows.rows()) throw ValidationError("estimate_effect: theta and design rows differ");
  const Eigen::Index col = covariate_column(design, covariate);
  const MatrixXd x = with_intercept(design);
  const auto f = linalg::ols(x, theta);
  const double df = static_cast<double>(f.n - f.p);
  if (df <= 0) throw NumericalError("estimate_effect: no residual degrees of freedom");
  const double tq = boost::math::quantile(boost::math::students_t(df), 0.5 + level / 2.0);
  std::vector<EffectEstimate> out;
  for (Eigen::Index k = 0; k < theta.cols(); ++k) {
    const double s2 = f.residuals.col(k).squaredNorm() / df;
    EffectEstimate e;
    e.topic = static_cast<int>(k);
    e.covariate = covariate;
    e.estimate = f.coef(col, k);
    e.std_error = std::sqrt(s2 * f.xtx_inv(col, col));
    e.ci_low = e.estimate - tq * e.std_error;
    e.ci_high = e.estimate + tq * e.std_error;
    e.method = "analytic";
    out.push_back(e);
  }
  return out;
}

std::vector<EffectEstimate> estimate_effect(const TopicModelFit& fit, const CovariateDesign& design,
                                            const std::string& covariate, const EffectOptions& opts) {
  if (opts.uncertainty == Uncertainty::Analytic) return estimate_effect(fit.theta, design, covariate, opts.level);
  if (opts.draws < 2) throw ValidationError("estimate_effect: need at least two draws");
  const Eigen::Index col = covariate_column(design, covariate);
  const MatrixXd x = with_intercept(design);
  const Eigen::Index D = fit.lambda.rows(), L = fit.lambda.cols(), K = L + 1;
  auto engine = make_engine(opts.seed, "effect-draws");
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> draws(static_cast<std::size_t>(K));
  MatrixXd theta(D, K);
  for (int s = 0; s < opts.draws; ++s) {
    for (Eigen::Index d = 0; d < D; ++d) {
      VectorXd eta(K);
      for (Eigen::Index k = 0; k < L; ++k) eta(k) = fit.lambda(d, k) + std::sqrt(fit.nu(d, k)) * z(engine);
      eta(L) = 0.0;
      const double m = eta.maxCoeff();
      const VectorXd e = (eta.array() - m).exp().matrix();
      theta.row(d) = (e / e.sum()).transpose();
    }
    const MatrixXd coef = linalg::ols(x, theta).coef;
    for (Eigen::Index k = 0; k < K; ++k) draws[static_cast<std::size_t>(k)].push_back(coef(col, k));
  }
  std::vector<EffectEstimate> out;
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& v = draws[static_cast<std::size_t>(k)];
    EffectEstimate e;
    e.topic = static_cast<int>(k);
    e.covariate = covariate;
    e.estimate = stats::mean(v);
    e.std_error = stats::stddev(v);
    e.ci_low = stats::quantile(v, 0.5 - opts.level / 2.0);
    e.ci_high = stats::quantile(v, 0.5 + opts.level / 2.0);
    e.method = fmt::format("simulation ({} draws)", opts.draws);
    out.push_back(e);
  }
  return out;
}

void write_fit_archive(const TopicModelFit& fit, const std::filesystem::path& path, const std::string& config_hash) {
  using detail::matrix_to_json;
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["K"] = fit.K;
  j["seed"] = fit.seed;
  j["config_hash"] = config_hash;
  j["iterations_used"] = fit.iterations_used;
  j["converged"] = fit.converged;
  j["bound_trace"] = fit.bound_trace;
  j["covariate_names"] = fit.covariate_names;
  j["vocabulary"] = fit.vocabulary;
  j["beta"] = matrix_to_json(fit.beta);
  j["theta"] = matrix_to_json(fit.theta);
  j["gamma_intercept"] = detail::vector_to_json(fit.gamma_intercept);
  j["gamma"] = matrix_to_json(fit.gamma);
  j["sigma"] = matrix_to_json(fit.sigma);
  j["lambda"] = matrix_to_json(fit.lambda);
  j["nu"] = matrix_to_json(fit.nu);
  write_text_file(path, j.dump() + '\n');
}

TopicModelFit read_fit_archive(const std::filesystem::path& path) {
  using detail::matrix_from_json;
  const auto j = nlohmann::json::parse(read_text_file(path));
  if (j.value("format_version", 0) != 1) throw IoError(fmt::format("'{}': unsupported fit archive", path.string()));
  TopicModelFit f;
  f.K = j.at("K").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.iterations_used = j.at("iterations_used").get<int>();
  f.converged = j.at("converged").get<bool>();
  f.bound_trace = j.at("bound_trace").get<std::vector<double>>();
  f.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
  f.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  f.beta = matrix_from_json(j.at("beta"));
  f.theta = matrix_from_json(j.at("theta"));
  f.gamma_intercept = detail::vector_from_json(j.at("gamma_intercept"));
  f.gamma = matrix_from_json(j.at("gamma"), f.K - 1);
  f.sigma = matrix_from_json(j.at("sigma"));
  f.lambda = matrix_from_json(j.at("lambda"));
  f.nu = matrix_from_json(j.at("nu"));
  if (f.beta.rows() != f.K || f.theta.cols() != f.K) throw IoError("fit archive: dimensions disagree with K");
  return f;
}

}  // namespace topictrend::topics
