#pragma once

#include <optional>
#include <string>
#include <vector>

namespace topictrend::citation {

enum class Transform { LogCY, Log1pCY, IHS };

std::string to_string(Transform t);

/// f(c / y). Returns nullopt for LogCY at zero citations (the row is
/// dropped). Throws ValidationError when years_since_pub <= 0.
std::optional<double> transform_citations(double citations, double years_since_pub, Transform mode);

/// (reference_year - publication_year) + 1.
double years_since_publication(int publication_year, int reference_year);

struct CitationRow {
  double citations = 0.0;
  double years_since_pub = 1.0;
  double topic_prevalence = 0.0;  // raw share, logged inside the fit
  bool open_access = false;
  std::string author;
  int year = 0;
  std::string journal;
};

struct RegressionOptions {
  Transform transform = Transform::IHS;
  bool author_fixed_effects = true;
  bool open_access = true;
  double prevalence_floor = 1e-12;
};

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct RegressionFit {
  std::vector<Coefficient> coefficients;  // log(topic) first
  std::vector<std::string> omitted;       // collinear regressors
  int n = 0;
  int dropped = 0;
  int clusters = 0;
  int parameters = 0;  // incl. absorbed fixed effects
  double r2 = 0.0;
  double within_r2 = 0.0;
  std::string fixed_effects = "year x journal";
  Transform transform = Transform::IHS;

  const Coefficient& topic() const { return coefficients.front(); }
};

/// y = b_T log(T_j) + b_OA 1_OA + author dummies + year x journal FE + e,
/// estimated by the within transformation with cluster-robust (year x
/// journal) errors scaled by G/(G-1) * (N-1)/(N-K).
RegressionFit fit_citation_model(const std::vector<CitationRow>& rows, const RegressionOptions& opts = {});

/// Same model with every fixed effect as an explicit dummy column.
RegressionFit fit_citation_model_dummies(const std::vector<CitationRow>& rows, const RegressionOptions& opts = {});

}  // namespace topictrend::citation
