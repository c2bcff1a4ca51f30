#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "topictrend/corpus.hpp"

namespace topictrend::topics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Prevalence covariates, one row per document, every column centered.
struct CovariateDesign {
  MatrixXd rows;  // D x P
  std::vector<std::string> names;
  std::string encoding_note;

  int num_covariates() const { return static_cast<int>(rows.cols()); }
};

/// Centers `raw` column-wise; throws ValidationError for a column that is
/// constant (zero after centering) and NumericalError for a rank deficient
/// design.
CovariateDesign make_design(const MatrixXd& raw, std::vector<std::string> names, std::string note = {});

/// Year as a centered linear term plus journal type one-hot with the first
/// present level as baseline.
CovariateDesign design_from_records(const std::vector<corpus::DocumentRecord>& records,
                                    bool include_year = true, bool include_journal_type = true);

/// Design with zero columns: the prior mean reduces to a common intercept.
CovariateDesign intercept_only_design(int num_docs);

enum class InitMode { Random, Spectral };

struct FitOptions {
  int max_iterations = 75;
  double tolerance = 1e-5;  // relative bound change
  std::uint64_t seed = 1;
  InitMode init = InitMode::Random;
  double gamma_ridge = 1.0;
  int estep_max_iterations = 50;
  double estep_tolerance = 1e-7;
  /// Asserts row-stochasticity and monotonicity after every iteration.
  bool debug_checks = false;
};

struct TopicModelFit {
  int K = 0;
  MatrixXd beta;             // K x V, rows sum to 1
  MatrixXd theta;            // D x K, rows sum to 1
  MatrixXd gamma;            // P x (K-1)
  VectorXd gamma_intercept;  // K-1
  MatrixXd sigma;            // (K-1) x (K-1)
  MatrixXd lambda;           // D x (K-1) variational means
  MatrixXd nu;               // D x (K-1) variational variances (diagonal)
  std::vector<double> bound_trace;
  std::uint64_t seed = 0;
  int iterations_used = 0;
  bool converged = false;
  std::vector<std::string> covariate_names;
  std::vector<std::string> vocabulary;
};

/// Variational EM for the logistic-normal topic model with prevalence
/// covariates:
///   eta_d ~ N(gamma_intercept + X_d gamma, sigma), theta_d = softmax(eta_d, 0),
///   w_dn ~ Multinomial(theta_d' beta).
/// q(eta_d) = N(lambda_d, diag(nu_d)); the log-sum-exp term is bounded with
/// an auxiliary zeta_d, so the tracked objective is a proper lower bound and
/// every update is a coordinate ascent step on it.
TopicModelFit fit(const corpus::ProcessedCorpus& corpus, const CovariateDesign& design, int K,
                  const FitOptions& opts = {});

/// Per-document contribution to the bound at the given parameters with the
/// word assignments and zeta profiled out. Exposed for tests.
double document_bound(const std::vector<corpus::SparseEntry>& words, const VectorXd& lambda,
                      const VectorXd& nu, const VectorXd& mu, const MatrixXd& sigma_inv,
                      double log_det_sigma, const MatrixXd& beta);

enum class RankMetric { HighestProb, Frex };

/// Word indices per topic, best first. Ties go to the lower vocabulary index.
std::vector<std::vector<int>> top_words(const MatrixXd& beta, int n, RankMetric metric,
                                        double frex_weight = 0.7);
/// FREX score matrix (K x V): weighted harmonic mean of the within-topic
/// ECDF of exclusivity (weight `frex_weight`) and of frequency.
MatrixXd frex_scores(const MatrixXd& beta, double frex_weight = 0.7);
/// beta[k, w] / sum_j beta[j, w].
MatrixXd exclusivity_shares(const MatrixXd& beta);

struct TopicQuality {
  std::vector<double> coherence;    // per topic
  std::vector<double> exclusivity;  // per topic
  double mean_coherence = 0.0;
  double mean_exclusivity = 0.0;
};

/// Semantic coherence over the top-M HighestProb words with +1 smoothing,
/// and exclusivity as the mean exclusivity share of those words.
TopicQuality coherence_exclusivity(const MatrixXd& beta, const corpus::ProcessedCorpus& corpus, int M = 10);

struct KSelectionRow {
  int K = 0;
  double coherence = 0.0;
  double exclusivity = 0.0;
  double ser = 0.0;
  std::optional<double> delta_ser;
  std::optional<double> weighted_delta_ser;
  bool improvement = false;  // wSER < 0
  bool highlight = false;
  int iterations_used = 0;
};

struct KSelectionReport {
  std::vector<KSelectionRow> rows;
  std::optional<int> highlighted_k;
};

/// SER/dSER/wSER bookkeeping for (K, SC, EX) triples ordered by K.
KSelectionReport assemble_k_report(const std::vector<std::tuple<int, double, double>>& k_sc_ex);

struct KScanOptions {
  int k_min = 5;
  int k_max = 40;
  int coherence_top_words = 10;
  int threads = 1;
  FitOptions fit;
};

KSelectionReport k_scan(const corpus::ProcessedCorpus& corpus, const CovariateDesign& design,
                        const KScanOptions& opts = {});

enum class Uncertainty { Analytic, Simulation };

struct EffectEstimate {
  int topic = 0;
  std::string covariate;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string method;
};

struct EffectOptions {
  Uncertainty uncertainty = Uncertainty::Analytic;
  int draws = 100;
  double level = 0.95;
  std::uint64_t seed = 1;
};

/// Regression of each theta column on [1, X]. `covariate` is a column name
/// of the design or "(Intercept)".
std::vector<EffectEstimate> estimate_effect(const TopicModelFit& fit, const CovariateDesign& design,
                                            const std::string& covariate, const EffectOptions& opts = {});

/// Same as above for an explicit document-topic matrix (analytic only).
std::vector<EffectEstimate> estimate_effect(const MatrixXd& theta, const CovariateDesign& design,
                                            const std::string& covariate, double level = 0.95);

/// Anchor-word initialization of beta (K x V).
MatrixXd spectral_init(const corpus::ProcessedCorpus& corpus, int K);

/// JSON archive with a format version, beta, theta, gamma, sigma, seed and
/// a hash of the fitting configuration.
void write_fit_archive(const TopicModelFit& fit, const std::filesystem::path& path,
                       const std::string& config_hash);
TopicModelFit read_fit_archive(const std::filesystem::path& path);

}  // namespace topictrend::topics
