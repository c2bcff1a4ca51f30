#include "topictrend/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "topictrend/error.hpp"
#include "topictrend/linalg.hpp"
#include "topictrend/random.hpp"

namespace topictrend::topics {

namespace {

using corpus::SparseEntry;

// log sum_k exp(lambda_k) beta_kv with lambda_K = 0, for every word of a
// document.
double word_likelihood(const std::vector<SparseEntry>& words, const VectorXd& lambda, const MatrixXd& beta) {
  const Eigen::Index K = beta.rows();
  const double m = std::max(0.0, lambda.maxCoeff());
  VectorXd w(K);
  for (Eigen::Index k = 0; k + 1 < K; ++k) w(k) = std::exp(lambda(k) - m);
  w(K - 1) = std::exp(-m);
  double total = 0.0;
  for (const auto& e : words) {
    const double s = beta.col(e.term).dot(w);
    total += e.count * (m + std::log(s));
  }
  return total;
}

// log(sum_{k<K} exp(lambda_k + nu_k / 2) + 1)
double log_zeta(const VectorXd& lambda, const VectorXd& nu) {
  const VectorXd a = (lambda.array() + 0.5 * nu.array()).matrix();
  const double m = std::max(0.0, a.maxCoeff());
  return m + std::log((a.array() - m).exp().sum() + std::exp(-m));
}

class DocumentInference {
 public:
  DocumentInference(const std::vector<SparseEntry>& words, const MatrixXd& beta, const VectorXd& mu,
                    const MatrixXd& sigma_inv, double log_det_sigma)
      : words_(words), beta_(beta), mu_(mu), sigma_inv_(sigma_inv), log_det_sigma_(log_det_sigma),
        L_(mu.size()) {
    for (const auto& e : words) n_ += e.count;
  }

  double bound(const VectorXd& lambda, const VectorXd& nu) const {
    const VectorXd diff = lambda - mu_;
    return word_likelihood(words_, lambda, beta_) - n_ * log_zeta(lambda, nu) - 0.5 * log_det_sigma_ -
           0.5 * sigma_inv_.diagonal().dot(nu) - 0.5 * diff.dot(sigma_inv_ * diff) +
           0.5 * nu.array().log().sum() + 0.5 * static_cast<double>(L_);
  }

  // Expected topic counts S_k = sum_v c_v phi_vk at the given lambda.
  VectorXd expected_counts(const VectorXd& lambda) const {
    const Eigen::Index K = beta_.rows();
    const double m = std::max(0.0, lambda.maxCoeff());
    VectorXd w(K);
    for (Eigen::Index k = 0; k + 1 < K; ++k) w(k) = std::exp(lambda(k) - m);
    w(K - 1) = std::exp(-m);
    VectorXd s = VectorXd::Zero(K);
    for (const auto& e : words_) {
      const VectorXd p = beta_.col(e.term).cwiseProduct(w);
      s += (e.count / p.sum()) * p;
    }
    return s;
  }

  // Accumulates c_v phi_vk into `ss` (K x V).
  void accumulate(const VectorXd& lambda, MatrixXd& ss) const {
    const Eigen::Index K = beta_.rows();
    const double m = std::max(0.0, lambda.maxCoeff());
    VectorXd w(K);
    for (Eigen::Index k = 0; k + 1 < K; ++k) w(k) = std::exp(lambda(k) - m);
    w(K - 1) = std::exp(-m);
    for (const auto& e : words_) {
      const VectorXd p = beta_.col(e.term).cwiseProduct(w);
      ss.col(e.term) += (e.count / p.sum()) * p;
    }
  }

  // Coordinate ascent on (phi, zeta, lambda, nu). Every step is an ascent
  // step on the full bound, so the profiled bound never decreases.
  void run(VectorXd& lambda, VectorXd& nu, int max_iter, double tol) const {
    double prev = bound(lambda, nu);
    for (int it = 0; it < max_iter; ++it) {
      const VectorXd s = expected_counts(lambda).head(L_);
      update_lambda(lambda, nu, s);
      update_nu(lambda, nu);
      const double cur = bound(lambda, nu);
      if (std::abs(cur - prev) <= tol * (std::abs(prev) + 1.0)) break;
      prev = cur;
    }
  }

 private:
  const std::vector<SparseEntry>& words_;
  const MatrixXd& beta_;
  const VectorXd& mu_;
  const MatrixXd& sigma_inv_;
  double log_det_sigma_;
  Eigen::Index L_;
  double n_ = 0.0;

  // f(lambda) with phi and zeta held fixed; strictly concave.
  double lambda_objective(const VectorXd& lambda, const VectorXd& nu, const VectorXd& s, double zeta) const {
    const VectorXd diff = lambda - mu_;
    return -0.5 * diff.dot(sigma_inv_ * diff) + lambda.dot(s) -
           (n_ / zeta) * (lambda.array() + 0.5 * nu.array()).exp().sum();
  }

  void update_lambda(VectorXd& lambda, const VectorXd& nu, const VectorXd& s) const {
    const double zeta = std::exp(log_zeta(lambda, nu));
    double f = lambda_objective(lambda, nu, s, zeta);
    for (int newton = 0; newton < 25; ++newton) {
      const VectorXd e = (lambda.array() + 0.5 * nu.array()).exp().matrix();
      const VectorXd grad = -sigma_inv_ * (lambda - mu_) + s - (n_ / zeta) * e;
      if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
      MatrixXd neg_hess = sigma_inv_;
      neg_hess.diagonal() += (n_ / zeta) * e;
      const VectorXd step = neg_hess.llt().solve(grad);
      const double slope = grad.dot(step);
      if (!(slope > 0.0) || !step.allFinite()) break;
      double t = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        const VectorXd cand = lambda + t * step;
        const double fc = lambda_objective(cand, nu, s, zeta);
        if (std::isfinite(fc) && fc >= f + 1e-4 * t * slope) {
          lambda = cand;
          f = fc;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted || t * step.lpNorm<Eigen::Infinity>() < 1e-12) break;
    }
  }

  // Each nu_k maximizes -a s / 2 - b exp(s / 2) + log(s) / 2 with zeta fixed.
  void update_nu(const VectorXd& lambda, VectorXd& nu) const {
    const double zeta = std::exp(log_zeta(lambda, nu));
    for (Eigen::Index k = 0; k < L_; ++k) {
      const double a = sigma_inv_(k, k);
      const double b = (n_ / zeta) * std::exp(lambda(k));
      auto deriv = [&](double v) { return -0.5 * a - 0.5 * b * std::exp(0.5 * v) + 0.5 / v; };
      auto objective = [&](double v) { return -0.5 * a * v - b * std::exp(0.5 * v) + 0.5 * std::log(v); };
      // Bracket the root of the decreasing derivative.
      double lo = 1e-300, hi = std::max(1.0, nu(k));
      while (deriv(hi) > 0.0 && hi < 1e300) hi *= 2.0;
      lo = std::min(hi, nu(k));
      while (deriv(lo) < 0.0 && lo > 1e-300) lo *= 0.5;
      double v = std::clamp(nu(k), lo, hi);
      for (int it = 0; it < 100; ++it) {
        const double d = deriv(v);
        if (d > 0.0) lo = v;
        else hi = v;
        const double d2 = -0.25 * b * std::exp(0.5 * v) - 0.5 / (v * v);
        double next = v - d / d2;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - v) <= 1e-14 * v) {
          v = next;
          break;
        }
        v = next;
      }
      if (objective(v) >= objective(nu(k))) nu(k) = v;
    }
  }
};

struct Params {
  MatrixXd beta;
  VectorXd gamma_intercept;
  MatrixXd gamma;
  MatrixXd sigma;
  MatrixXd sigma_inv;
  double log_det_sigma = 0.0;
  MatrixXd mu;  // D x L
};

void refresh_sigma(Params& p) {
  p.sigma = 0.5 * (p.sigma + p.sigma.transpose());
  p.sigma_inv = linalg::spd_inverse(p.sigma);
  p.log_det_sigma = linalg::log_det_spd(p.sigma);
}

// log density of the matrix-normal ridge prior gamma ~ MN(0, I / rho, sigma).
double gamma_log_prior(const Params& p, double rho) {
  const auto P = static_cast<double>(p.gamma.rows());
  const auto L = static_cast<double>(p.gamma.cols());
  if (P == 0.0) return 0.0;
  const double quad = (p.gamma * p.sigma_inv * p.gamma.transpose()).trace();
  return -0.5 * P * L * std::log(2.0 * M_PI / rho) - 0.5 * P * p.log_det_sigma - 0.5 * rho * quad;
}

// Each topic row is a Dirichlet draw centred on the topic-word counts of a
// short seeded collapsed Gibbs pass (plain LDA). Draws centred on the corpus
// frequencies instead start every topic at the same point, and the prior
// covariance collapses before the topics separate.
MatrixXd random_beta(const corpus::ProcessedCorpus& corpus, int K, std::uint64_t seed) {
  constexpr int kSweeps = 30;
  constexpr double kAlpha = 0.1, kEta = 0.01;
  const auto V = static_cast<Eigen::Index>(corpus.num_terms());
  auto engine = make_engine(seed, "topic-init");
  std::uniform_int_distribution<int> any_topic(0, K - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<int> words, docs, z;
  for (std::size_t d = 0; d < corpus.num_docs(); ++d)
    for (const auto& e : corpus.counts[d])
      for (int c = 0; c < e.count; ++c) {
        words.push_back(e.term);
        docs.push_back(static_cast<int>(d));
      }
  MatrixXd n_kv = MatrixXd::Zero(K, V), n_dk = MatrixXd::Zero(static_cast<Eigen::Index>(corpus.num_docs()), K);
  VectorXd n_k = VectorXd::Zero(K);
  z.resize(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    z[i] = any_topic(engine);
    n_kv(z[i], words[i]) += 1;
    n_dk(docs[i], z[i]) += 1;
    n_k(z[i]) += 1;
  }
  VectorXd p(K);
  const double v_eta = static_cast<double>(V) * kEta;
  for (int sweep = 0; sweep < kSweeps; ++sweep) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      const int w = words[i], d = docs[i];
      n_kv(z[i], w) -= 1;
      n_dk(d, z[i]) -= 1;
      n_k(z[i]) -= 1;
      for (int k = 0; k < K; ++k) p(k) = (n_kv(k, w) + kEta) / (n_k(k) + v_eta) * (n_dk(d, k) + kAlpha);
      double u = unit(engine) * p.sum();
      int k = 0;
      while (k + 1 < K && (u -= p(k)) > 0.0) ++k;
      z[i] = k;
      n_kv(k, w) += 1;
      n_dk(d, k) += 1;
      n_k(k) += 1;
    }
  }

  MatrixXd beta(K, V);
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index v = 0; v < V; ++v) {
      std::gamma_distribution<double> g(n_kv(k, v) + kEta, 1.0);
      beta(k, v) = g(engine) + 1e-12;
    }
    beta.row(k) /= beta.row(k).sum();
  }
  return beta;
}

void check_row_stochastic(const MatrixXd& m, const char* what, int iteration) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (std::abs(m.row(r).sum() - 1.0) > 1e-8 || m.row(r).minCoeff() < 0.0)
      throw NumericalError(fmt::format("{} row {} not stochastic at iteration {}", what, r, iteration));
  }
}

}  // namespace

double document_bound(const std::vector<SparseEntry>& words, const VectorXd& lambda, const VectorXd& nu,
                      const VectorXd& mu, const MatrixXd& sigma_inv, double log_det_sigma, const MatrixXd& beta) {
  return DocumentInference(words, beta, mu, sigma_inv, log_det_sigma).bound(lambda, nu);
}

TopicModelFit fit(const corpus::ProcessedCorpus& corpus, const CovariateDesign& design, int K,
                  const FitOptions& opts) {
  const auto D = static_cast<Eigen::Index>(corpus.num_docs());
  const auto V = static_cast<Eigen::Index>(corpus.num_terms());
  if (K < 2 || K > V) throw ValidationError(fmt::format("fit: K = {} outside [2, V = {}]", K, V));
  if (D < K) throw ValidationError(fmt::format("fit: {} documents fewer than K = {}", D, K));
  if (design.rows.rows() != D)
    throw ValidationError(fmt::format("fit: design has {} rows for {} documents", design.rows.rows(), D));
  if (opts.max_iterations < 1) throw ValidationError("fit: max_iterations must be positive");
  for (Eigen::Index d = 0; d < D; ++d)
    if (corpus.counts[static_cast<std::size_t>(d)].empty()) throw ValidationError("fit: corpus has an empty document");

  const MatrixXd& X = design.rows;
  const Eigen::Index P = X.cols();
  if (P > 0 && linalg::rank(X) < P) throw NumericalError("fit: covariate design is rank deficient");
  const Eigen::Index L = K - 1;
  const double rho = opts.gamma_ridge;
  if (P > 0 && !(rho > 0.0)) throw ValidationError("fit: gamma_ridge must be positive");

  Params params;
  params.beta = opts.init == InitMode::Spectral ? spectral_init(corpus, K) : random_beta(corpus, K, opts.seed);
  params.gamma_intercept = VectorXd::Zero(L);
  params.gamma = MatrixXd::Zero(P, L);
  params.sigma = 20.0 * MatrixXd::Identity(L, L);
  params.mu = MatrixXd::Zero(D, L);
  refresh_sigma(params);

  MatrixXd ridge_solve;  // (X'X + rho I)^-1 X'
  if (P > 0) {
    MatrixXd a = X.transpose() * X;
    a.diagonal().array() += rho;
    ridge_solve = a.ldlt().solve(X.transpose());
  }

  MatrixXd lambda = MatrixXd::Zero(D, L);
  MatrixXd nu = MatrixXd::Ones(D, L);

  TopicModelFit out;
  out.K = K;
  out.seed = opts.seed;

  auto total_bound = [&](const Params& p) {
    double b = gamma_log_prior(p, rho);
    for (Eigen::Index d = 0; d < D; ++d) {
      const VectorXd mu_d = p.mu.row(d).transpose();
      b += DocumentInference(corpus.counts[static_cast<std::size_t>(d)], p.beta, mu_d, p.sigma_inv, p.log_det_sigma)
               .bound(lambda.row(d).transpose(), nu.row(d).transpose());
    }
    return b;
  };

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    // E-step
    MatrixXd beta_ss = MatrixXd::Zero(K, V);
    for (Eigen::Index d = 0; d < D; ++d) {
      const VectorXd mu_d = params.mu.row(d).transpose();
      DocumentInference doc(corpus.counts[static_cast<std::size_t>(d)], params.beta, mu_d, params.sigma_inv,
                            params.log_det_sigma);
      VectorXd lam = lambda.row(d).transpose();
      VectorXd n = nu.row(d).transpose();
      doc.run(lam, n, opts.estep_max_iterations, opts.estep_tolerance);
      lambda.row(d) = lam.transpose();
      nu.row(d) = n.transpose();
      doc.accumulate(lam, beta_ss);
    }

    // M-step: beta
    for (int k = 0; k < K; ++k) {
      const double s = beta_ss.row(k).sum();
      if (s > 0.0) params.beta.row(k) = beta_ss.row(k) / s;
    }
    // M-step: prior mean and covariance, jointly optimal under the ridge prior.
    params.gamma_intercept = lambda.colwise().mean().transpose();
    if (P > 0) params.gamma = ridge_solve * lambda;
    params.mu = (P > 0 ? MatrixXd(X * params.gamma) : MatrixXd::Zero(D, L)).rowwise() +
                params.gamma_intercept.transpose();
    const MatrixXd resid = lambda - params.mu;
    MatrixXd m = resid.transpose() * resid;
    m.diagonal() += nu.colwise().sum().transpose();
    if (P > 0) m += rho * params.gamma.transpose() * params.gamma;
    params.sigma = m / static_cast<double>(D + P);
    refresh_sigma(params);

    const double b = total_bound(params);
    if (!std::isfinite(b)) throw NumericalError(fmt::format("fit: non-finite bound at iteration {}", iter));
    out.bound_trace.push_back(b);
    out.iterations_used = iter;

    if (opts.debug_checks) {
      check_row_stochastic(params.beta, "beta", iter);
      if (out.bound_trace.size() >= 2 && b < out.bound_trace[out.bound_trace.size() - 2] - 1e-6)
        throw NumericalError(fmt::format("fit: bound decreased at iteration {}", iter));
    }
    if (out.bound_trace.size() >= 2) {
      const double prev = out.bound_trace[out.bound_trace.size() - 2];
      if (std::abs(b - prev) < opts.tolerance * std::abs(prev)) {
        out.converged = true;
        break;
      }
    }
  }

  out.beta = params.beta;
  out.gamma = params.gamma;
  out.gamma_intercept = params.gamma_intercept;
  out.sigma = params.sigma;
  out.lambda = lambda;
  out.nu = nu;
  out.theta.resize(D, K);
  for (Eigen::Index d = 0; d < D; ++d) {
    const double m = std::max(0.0, lambda.row(d).maxCoeff());
    for (Eigen::Index k = 0; k < L; ++k) out.theta(d, k) = std::exp(lambda(d, k) - m);
    out.theta(d, L) = std::exp(-m);
    out.theta.row(d) /= out.theta.row(d).sum();
  }
  if (opts.debug_checks) check_row_stochastic(out.theta, "theta", out.iterations_used);
  out.covariate_names = design.names;
  out.vocabulary = corpus.vocabulary;
  return out;
}

CovariateDesign make_design(const MatrixXd& raw, std::vector<std::string> names, std::string note) {
  if (static_cast<Eigen::Index>(names.size()) != raw.cols())
    throw ValidationError("make_design: one name per column required");
  CovariateDesign design;
  design.rows = raw.rowwise() - raw.colwise().mean();
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double scale = std::max(1.0, raw.col(c).cwiseAbs().maxCoeff());
    if (design.rows.col(c).cwiseAbs().maxCoeff() <= 1e-12 * scale)
      throw ValidationError(fmt::format("make_design: covariate '{}' is constant", names[static_cast<std::size_t>(c)]));
  }
  if (raw.cols() > 0 && linalg::rank(design.rows) < raw.cols())
    throw NumericalError("make_design: covariates are collinear");
  design.names = std::move(names);
  design.encoding_note = std::move(note);
  return design;
}

CovariateDesign design_from_records(const std::vector<corpus::DocumentRecord>& records, bool include_year,
                                    bool include_journal_type) {
  const auto D = static_cast<Eigen::Index>(records.size());
  std::vector<std::string> names;
  std::vector<VectorXd> cols;
  std::string note;
  if (include_year) {
    VectorXd y(D);
    for (Eigen::Index d = 0; d < D; ++d) y(d) = records[static_cast<std::size_t>(d)].year;
    if ((y.array() != y(0)).any()) {
      names.push_back("year");
      cols.push_back(y);
      note += "year: centered linear term";
    }
  }
  if (include_journal_type) {
    using corpus::JournalType;
    std::vector<JournalType> present;
    for (auto t : {JournalType::Top5, JournalType::GeneralInterest, JournalType::Field,
                   JournalType::IndustrialOrganization, JournalType::Antitrust}) {
      if (std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.journal_type == t; }))
        present.push_back(t);
    }
    if (present.size() > 1) {
      if (!note.empty()) note += "; ";
      note += fmt::format("journal_type: one-hot, baseline {}", corpus::to_string(present.front()));
      for (std::size_t i = 1; i < present.size(); ++i) {
        VectorXd c(D);
        for (Eigen::Index d = 0; d < D; ++d) c(d) = records[static_cast<std::size_t>(d)].journal_type == present[i];
        names.push_back(fmt::format("journal_type:{}", corpus::to_string(present[i])));
        cols.push_back(c);
      }
    }
  }
  MatrixXd raw(D, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) raw.col(static_cast<Eigen::Index>(c)) = cols[c];
  return make_design(raw, std::move(names), std::move(note));
}

CovariateDesign intercept_only_design(int num_docs) {
  CovariateDesign d;
  d.rows = MatrixXd::Zero(num_docs, 0);
  d.encoding_note = "intercept only";
  return d;
}

}  // namespace topictrend::topics
