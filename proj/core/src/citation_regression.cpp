#include "topictrend/citation_regression.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "topictrend/error.hpp"

namespace topictrend::citation {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Transform t) {
  switch (t) {
    case Transform::LogCY: return "log(c/y)";
    case Transform::Log1pCY: return "log(c/y+1)";
    default: return "ihs(c/y)";
  }
}

std::optional<double> transform_citations(double citations, double years_since_pub, Transform mode) {
  if (!(years_since_pub > 0.0)) throw ValidationError("years since publication must be positive");
  if (citations < 0.0) throw ValidationError("citation count must be non-negative");
  const double cy = citations / years_since_pub;
  switch (mode) {
    case Transform::LogCY:
      if (cy == 0.0) return std::nullopt;
      return std::log(cy);
    case Transform::Log1pCY: return std::log1p(cy);
    default: return std::log(cy + std::sqrt(cy * cy + 1.0));
  }
}

double years_since_publication(int publication_year, int reference_year) {
  return static_cast<double>(reference_year - publication_year) + 1.0;
}

namespace {

struct Prepared {
  VectorXd y;
  MatrixXd x;  // candidate regressors in order
  std::vector<std::string> names;
  std::vector<int> group;  // year x journal cell per row
  int groups = 0;
  int dropped = 0;
};

Prepared prepare(const std::vector<CitationRow>& rows, const RegressionOptions& opts) {
  Prepared p;
  std::vector<const CitationRow*> kept;
  std::vector<double> ys;
  for (const auto& r : rows) {
    const auto v = transform_citations(r.citations, r.years_since_pub, opts.transform);
    if (!v) {
      ++p.dropped;
      continue;
    }
    if (r.topic_prevalence < 0.0 || !std::isfinite(r.topic_prevalence))
      throw ValidationError("topic prevalence must be a finite non-negative share");
    kept.push_back(&r);
    ys.push_back(*v);
  }
  const auto n = static_cast<Eigen::Index>(kept.size());
  if (n == 0) throw ValidationError("citation model: no usable rows");

  std::map<std::pair<int, std::string>, int> cells;
  for (const auto* r : kept) cells.emplace(std::make_pair(r->year, r->journal), 0);
  int g = 0;
  for (auto& [_, id] : cells) id = g++;
  p.groups = g;
  if (p.groups < 2) throw ValidationError("citation model: need at least two year x journal clusters");

  std::vector<std::string> authors;
  if (opts.author_fixed_effects) {
    std::set<std::string> uniq;
    for (const auto* r : kept) uniq.insert(r->author.empty() ? "(none)" : r->author);
    authors.assign(std::next(uniq.begin()), uniq.end());  // first level is the baseline
  }

  p.names.push_back("log_topic");
  if (opts.open_access) p.names.push_back("open_access");
  for (const auto& a : authors) p.names.push_back("author:" + a);
  p.y = Eigen::Map<const VectorXd>(ys.data(), n);
  p.x = MatrixXd::Zero(n, static_cast<Eigen::Index>(p.names.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = *kept[static_cast<std::size_t>(i)];
    p.group.push_back(cells.at({r.year, r.journal}));
    p.x(i, 0) = std::log(std::max(r.topic_prevalence, opts.prevalence_floor));
    Eigen::Index c = 1;
    if (opts.open_access) p.x(i, c++) = r.open_access ? 1.0 : 0.0;
    if (!authors.empty()) {
      const std::string a = r.author.empty() ? "(none)" : r.author;
      const auto it = std::lower_bound(authors.begin(), authors.end(), a);
      if (it != authors.end() && *it == a) p.x(i, c + (it - authors.begin())) = 1.0;
    }
  }
  return p;
}

// Greedy Gram-Schmidt selection: a column is kept when its component
// orthogonal to the columns already kept (including `base`) is non-negligible.
std::vector<Eigen::Index> independent_columns(const MatrixXd& base, const MatrixXd& x) {
  std::vector<VectorXd> q;
  auto residual = [&](VectorXd v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : q) v -= b.dot(v) * b;
    return v;
  };
  for (Eigen::Index c = 0; c < base.cols(); ++c) {
    const VectorXd r = residual(base.col(c));
    const double nr = r.norm();
    if (nr > 1e-9 * std::max(1.0, base.col(c).norm())) q.push_back(r / nr);
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const VectorXd r = residual(x.col(c));
    const double nr = r.norm();
    if (nr > 1e-9 * std::max(1.0, x.col(c).norm())) {
      q.push_back(r / nr);
      keep.push_back(c);
    }
  }
  return keep;
}

RegressionFit finish(const Prepared& p, const MatrixXd& design, const std::vector<Eigen::Index>& slope_cols,
                     Eigen::Index slope_offset, const VectorXd& y_fit, double tss_within, int parameters,
                     const RegressionOptions& opts) {
  const auto n = static_cast<Eigen::Index>(p.y.size());
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  const VectorXd b = qr.solve(y_fit);
  const VectorXd e = y_fit - design * b;
  const MatrixXd xtx_inv = (design.transpose() * design).ldlt().solve(MatrixXd::Identity(design.cols(), design.cols()));

  MatrixXd meat = MatrixXd::Zero(design.cols(), design.cols());
  std::vector<VectorXd> scores(static_cast<std::size_t>(p.groups), VectorXd::Zero(design.cols()));
  for (Eigen::Index i = 0; i < n; ++i)
    scores[static_cast<std::size_t>(p.group[static_cast<std::size_t>(i)])] += design.row(i).transpose() * e(i);
  for (const auto& s : scores) meat += s * s.transpose();
  const double G = p.groups, N = static_cast<double>(n), K = parameters;
  if (N - K <= 0) throw NumericalError("citation model: no residual degrees of freedom");
  const double factor = G / (G - 1.0) * (N - 1.0) / (N - K);
  const MatrixXd vcov = factor * xtx_inv * meat * xtx_inv;

  RegressionFit fit;
  fit.n = static_cast<int>(n);
  fit.dropped = p.dropped;
  fit.clusters = p.groups;
  fit.parameters = parameters;
  fit.transform = opts.transform;
  std::vector<bool> used(p.names.size(), false);
  for (std::size_t j = 0; j < slope_cols.size(); ++j) {
    const Eigen::Index c = slope_offset + static_cast<Eigen::Index>(j);
    used[static_cast<std::size_t>(slope_cols[j])] = true;
    fit.coefficients.push_back({p.names[static_cast<std::size_t>(slope_cols[j])], b(c), std::sqrt(vcov(c, c))});
  }
  for (std::size_t j = 0; j < p.names.size(); ++j)
    if (!used[j]) fit.omitted.push_back(p.names[j]);
  const double ssr = e.squaredNorm();
  const double tss = (p.y.array() - p.y.mean()).square().sum();
  fit.r2 = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
  fit.within_r2 = tss_within > 0.0 ? 1.0 - ssr / tss_within : 0.0;
  return fit;
}

MatrixXd demean(const MatrixXd& m, const std::vector<int>& group, int groups) {
  MatrixXd sums = MatrixXd::Zero(groups, m.cols());
  std::vector<int> counts(static_cast<std::size_t>(groups), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    sums.row(group[static_cast<std::size_t>(i)]) += m.row(i);
    ++counts[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])];
  }
  MatrixXd out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const int g = group[static_cast<std::size_t>(i)];
    out.row(i) -= sums.row(g) / counts[static_cast<std::size_t>(g)];
  }
  return out;
}

void require_topic_variation(const MatrixXd& xd, const MatrixXd& x) {
  if (xd.col(0).norm() <= 1e-9 * std::max(1.0, x.col(0).norm()))
    throw ValidationError("citation model: log topic prevalence has no variation within year x journal cells");
}

}  // namespace

RegressionFit fit_citation_model(const std::vector<CitationRow>& rows, const RegressionOptions& opts) {
  const Prepared p = prepare(rows, opts);
  const MatrixXd xd = demean(p.x, p.group, p.groups);
  const MatrixXd yd = demean(p.y, p.group, p.groups);
  require_topic_variation(xd, p.x);
  const auto keep = independent_columns(MatrixXd(xd.rows(), 0), xd);
  if (keep.empty() || keep.front() != 0) throw ValidationError("citation model: log topic prevalence is collinear");
  MatrixXd design(xd.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) design.col(static_cast<Eigen::Index>(j)) = xd.col(keep[j]);
  const int parameters = static_cast<int>(keep.size()) + p.groups;
  return finish(p, design, keep, 0, yd.col(0), yd.squaredNorm(), parameters, opts);
}

RegressionFit fit_citation_model_dummies(const std::vector<CitationRow>& rows, const RegressionOptions& opts) {
  const Prepared p = prepare(rows, opts);
  require_topic_variation(demean(p.x, p.group, p.groups), p.x);
  const auto n = p.y.size();
  MatrixXd fe = MatrixXd::Zero(n, p.groups);
  for (Eigen::Index i = 0; i < n; ++i) fe(i, p.group[static_cast<std::size_t>(i)]) = 1.0;
  const auto keep = independent_columns(fe, p.x);
  if (keep.empty() || keep.front() != 0) throw ValidationError("citation model: log topic prevalence is collinear");
  MatrixXd design(n, p.groups + static_cast<Eigen::Index>(keep.size()));
  design.leftCols(p.groups) = fe;
  for (std::size_t j = 0; j < keep.size(); ++j) design.col(p.groups + static_cast<Eigen::Index>(j)) = p.x.col(keep[j]);
  const double tss_within = demean(p.y, p.group, p.groups).squaredNorm();
  return finish(p, design, keep, p.groups, p.y, tss_within, static_cast<int>(design.cols()), opts);
}

}  // namespace topictrend::citation
