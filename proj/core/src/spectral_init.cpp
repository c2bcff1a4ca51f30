// Anchor-word initialization: word co-occurrence, greedy anchor selection by
// Gram-Schmidt, then per-word simplex-constrained recovery.

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "topictrend/error.hpp"
#include "topictrend/topic_model.hpp"

namespace topictrend::topics {

namespace {

// Euclidean projection onto the probability simplex.
VectorXd project_simplex(const VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, tau = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cumsum += u[i];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) tau = t;
  }
  return (v.array() - tau).max(0.0).matrix();
}

}  // namespace

MatrixXd spectral_init(const corpus::ProcessedCorpus& corpus, int K) {
  const auto V = static_cast<Eigen::Index>(corpus.num_terms());
  if (K < 2 || K > V) throw ValidationError(fmt::format("spectral_init: K = {} outside [2, {}]", K, V));

  MatrixXd Q = MatrixXd::Zero(V, V);
  for (const auto& row : corpus.counts) {
    double n = 0.0;
    for (const auto& e : row) n += e.count;
    if (n < 2.0) continue;
    const double norm = 1.0 / (n * (n - 1.0));
    for (const auto& a : row)
      for (const auto& b : row)
        Q(a.term, b.term) += norm * (static_cast<double>(a.count) * b.count - (a.term == b.term ? a.count : 0));
  }
  const double total = Q.sum();
  if (!(total > 0.0)) throw NumericalError("spectral_init: no document has two or more tokens");
  Q /= total;
  const VectorXd p_word = Q.rowwise().sum();
  MatrixXd Qbar = Q;
  for (Eigen::Index v = 0; v < V; ++v)
    if (p_word(v) > 0.0) Qbar.row(v) /= p_word(v);

  // Greedy anchors: largest residual norm after projecting out chosen rows.
  std::vector<Eigen::Index> anchors;
  MatrixXd resid = Qbar;
  for (int k = 0; k < K; ++k) {
    Eigen::Index best = -1;
    double best_norm = -1.0;
    for (Eigen::Index v = 0; v < V; ++v) {
      if (p_word(v) <= 0.0 || std::find(anchors.begin(), anchors.end(), v) != anchors.end()) continue;
      const double nv = resid.row(v).squaredNorm();
      if (nv > best_norm) {
        best_norm = nv;
        best = v;
      }
    }
    if (best < 0) throw NumericalError("spectral_init: fewer usable words than topics");
    anchors.push_back(best);
    const double bn = std::sqrt(best_norm);
    if (bn <= 1e-15) continue;
    const Eigen::RowVectorXd basis = resid.row(best) / bn;
    resid -= (resid * basis.transpose()) * basis;
  }

  MatrixXd S(K, V);
  for (int k = 0; k < K; ++k) S.row(k) = Qbar.row(anchors[static_cast<std::size_t>(k)]);
  const MatrixXd G = S * S.transpose();
  const double lmax = std::max(G.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / (2.0 * lmax);

  MatrixXd A = MatrixXd::Zero(V, K);
  for (Eigen::Index v = 0; v < V; ++v) {
    if (p_word(v) <= 0.0) continue;
    const VectorXd b = S * Qbar.row(v).transpose();
    VectorXd c = VectorXd::Constant(K, 1.0 / K);
    for (int it = 0; it < 500; ++it) {
      const VectorXd next = project_simplex(c - step * 2.0 * (G * c - b));
      const double change = (next - c).lpNorm<Eigen::Infinity>();
      c = next;
      if (change < 1e-10) break;
    }
    A.row(v) = p_word(v) * c.transpose();
  }

  MatrixXd beta = A.transpose();
  beta.array() += 1e-6 / static_cast<double>(V);
  for (int k = 0; k < K; ++k) beta.row(k) /= beta.row(k).sum();
  return beta;
}

}  // namespace topictrend::topics
