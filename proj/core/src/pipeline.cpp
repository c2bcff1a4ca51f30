#include "topictrend/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "detail/json_eigen.hpp"
#include "topictrend/citation_regression.hpp"
#include "topictrend/embeddings.hpp"
#include "topictrend/multivar.hpp"
#include "topictrend/random.hpp"
#include "topictrend/table.hpp"
#include "topictrend/topic_model.hpp"
#include "topictrend/trend_series.hpp"

namespace topictrend::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text_file(path)); }

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using detail::matrix_to_json;
using detail::vector_to_json;

// A NaN or infinity has no JSON representation; store null instead.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json opt(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

fs::path resolve(const PipelineConfig& c, const fs::path& p) { return p.is_absolute() ? p : c.base_dir / p; }
fs::path out_dir(const PipelineConfig& c) { return resolve(c, c.output); }

class StageContext {
 public:
  StageContext(const PipelineConfig& c, std::string stage) : config(c), stage_(std::move(stage)), dir_(out_dir(c)) {}

  const PipelineConfig& config;

  fs::path path(const std::string& rel) const { return dir_ / rel; }

  void write(const std::string& rel, const std::string& content) {
    write_text_file(dir_ / rel, content);
    written_.push_back(rel);
  }
  void write_json(const std::string& rel, const ordered_json& j) { write(rel, j.dump(1) + '\n'); }
  void adopt(const std::string& rel) { written_.push_back(rel); }

  ordered_json read_json(const std::string& rel) const {
    const auto p = dir_ / rel;
    if (!fs::exists(p)) throw ValidationError(fmt::format("missing upstream artifact '{}'", rel));
    return ordered_json::parse(read_text_file(p));
  }

  const std::vector<std::string>& written() const { return written_; }
  std::vector<std::string> warnings;

 private:
  std::string stage_;
  fs::path dir_;
  std::vector<std::string> written_;
};

std::string config_hash(const PipelineConfig& c) { return sha256_hex(c.canonical_json()); }

// ---- shared loaders -------------------------------------------------------

corpus::ProcessedCorpus load_corpus(const StageContext& ctx) {
  if (!fs::exists(ctx.path("corpus/manifest.json"))) throw ValidationError("missing corpus archive; run 'ingest' first");
  return corpus::read_corpus_archive(ctx.path("corpus"));
}

std::vector<corpus::DocumentRecord> load_records(const StageContext& ctx) {
  if (!fs::exists(ctx.path("records.tsv"))) throw ValidationError("missing records.tsv; run 'ingest' first");
  return corpus::read_records_table(ctx.path("records.tsv"));
}

topics::TopicModelFit load_fit(const StageContext& ctx) {
  if (!fs::exists(ctx.path("topics/fit.json"))) throw ValidationError("missing topic fit; run 'fit-topics' first");
  return topics::read_fit_archive(ctx.path("topics/fit.json"));
}

std::vector<int> years_of(const std::vector<corpus::DocumentRecord>& records) {
  std::vector<int> y;
  for (const auto& r : records) y.push_back(r.year);
  return y;
}

std::map<int, std::string> load_category_map(const PipelineConfig& c, int K) {
  std::map<int, std::string> m;
  if (!c.category_map) return m;
  const Table t = Table::read(resolve(c, *c.category_map));
  const auto ct = t.column("topic"), cc = t.column("category");
  for (const auto& row : t.rows) {
    int topic = 0;
    try {
      topic = std::stoi(row.at(ct));
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("category map: bad topic number '{}'", row.at(ct)));
    }
    if (topic < 1 || topic > K) throw ValidationError(fmt::format("category map: topic {} outside 1..{}", topic, K));
    if (!m.emplace(topic - 1, row.at(cc)).second) throw ValidationError(fmt::format("category map: topic {} listed twice", topic));
  }
  return m;
}

topics::CovariateDesign design_for(const PipelineConfig& c, const std::vector<corpus::DocumentRecord>& records) {
  if (!c.topics.year_covariate && !c.topics.journal_type_covariate)
    return topics::intercept_only_design(static_cast<int>(records.size()));
  return topics::design_from_records(records, c.topics.year_covariate, c.topics.journal_type_covariate);
}

topics::FitOptions fit_options(const PipelineConfig& c) {
  topics::FitOptions o;
  o.max_iterations = c.topics.max_iterations;
  o.tolerance = c.topics.tolerance;
  o.seed = substream_seed(c.seed, "topic-fit");
  o.init = c.topics.spectral_init ? topics::InitMode::Spectral : topics::InitMode::Random;
  return o;
}

ordered_json series_json(const trend::PrevalenceSeries& s) {
  ordered_json j;
  j["years"] = s.years;
  j["labels"] = s.labels;
  j["values"] = matrix_to_json(s.values);
  j["doc_counts"] = s.doc_counts;
  j["missing_years"] = s.missing_years;
  return j;
}

trend::PrevalenceSeries series_from_json(const json& j) {
  trend::PrevalenceSeries s;
  s.years = j.at("years").get<std::vector<int>>();
  s.labels = j.at("labels").get<std::vector<std::string>>();
  s.values = detail::matrix_from_json(j.at("values"), static_cast<Eigen::Index>(s.labels.size()));
  s.doc_counts = j.at("doc_counts").get<std::vector<int>>();
  s.missing_years = j.at("missing_years").get<std::vector<int>>();
  return s;
}

// Series analysed by unit-root and multivariate stages: categories when a
// category map is configured, topics otherwise.
trend::PrevalenceSeries analysis_series(const StageContext& ctx) {
  const auto t = ctx.read_json("trends.json");
  return series_from_json(t.at("category_series").is_null() ? t.at("topic_series") : t.at("category_series"));
}

multivar::Series multivar_series(const StageContext& ctx) {
  const auto s = analysis_series(ctx);
  std::vector<std::string> vars = ctx.config.multivar.variables;
  if (vars.empty()) {
    // Shares over all labels sum to one; leave the last out to avoid an exact
    // linear dependence with the constant.
    vars.assign(s.labels.begin(), s.labels.end() - 1);
  }
  if (vars.empty()) throw ValidationError("multivar: no variables");
  MatrixXd data(static_cast<Eigen::Index>(s.years.size()), static_cast<Eigen::Index>(vars.size()));
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto col = s.column_for_testing(vars[i]);
    data.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const VectorXd>(col.data(), static_cast<Eigen::Index>(col.size()));
  }
  if (ctx.config.multivar.log_levels) {
    if (!(data.array() > 0.0).all()) throw ValidationError("multivar: log_levels needs strictly positive series");
    data = data.array().log().matrix();
  }
  return multivar::make_series(data, vars);
}

multivar::DetSpec det_spec(const PipelineConfig& c) {
  return c.multivar.deterministic == "none" ? multivar::DetSpec::None : multivar::DetSpec::Constant;
}

std::optional<multivar::Bootstrap> bootstrap_spec(const PipelineConfig& c) {
  if (c.multivar.bootstrap < 2) return std::nullopt;
  return multivar::Bootstrap{c.multivar.bootstrap, c.multivar.level, substream_seed(c.seed, "bootstrap")};
}

ordered_json matrices_json(const std::vector<MatrixXd>& ms) {
  ordered_json a = ordered_json::array();
  for (const auto& m : ms) a.push_back(ordered_json(matrix_to_json(m)));
  return a;
}

ordered_json eigen_rows_json(const std::vector<multivar::EigenRow>& rows) {
  ordered_json a = ordered_json::array();
  for (const auto& e : rows) a.push_back({{"real", e.real}, {"imag", e.imag}, {"modulus", e.modulus}});
  return a;
}

ordered_json diagnostics_json(const multivar::Diagnostics& d) {
  ordered_json j;
  j["stability"] = eigen_rows_json(d.stability);
  j["stable"] = d.stable;
  ordered_json eqs = ordered_json::array();
  for (const auto& r : d.normality.equations)
    eqs.push_back({{"equation", r.equation},
                   {"skewness", num(r.skewness)},
                   {"kurtosis", num(r.kurtosis)},
                   {"skewness_chi2", num(r.skewness_chi2)},
                   {"skewness_p", num(r.skewness_p)},
                   {"kurtosis_chi2", num(r.kurtosis_chi2)},
                   {"kurtosis_p", num(r.kurtosis_p)},
                   {"jb", num(r.jb)},
                   {"jb_p", num(r.jb_p)}});
  const auto& n = d.normality;
  j["normality"] = {{"equations", eqs},
                    {"joint",
                     {{"skewness_chi2", num(n.joint_skewness_chi2)},
                      {"skewness_df", n.joint_skewness_df},
                      {"skewness_p", num(n.joint_skewness_p)},
                      {"kurtosis_chi2", num(n.joint_kurtosis_chi2)},
                      {"kurtosis_df", n.joint_kurtosis_df},
                      {"kurtosis_p", num(n.joint_kurtosis_p)},
                      {"jb", num(n.joint_jb)},
                      {"jb_df", n.joint_jb_df},
                      {"jb_p", num(n.joint_jb_p)}}}};
  ordered_json lm = ordered_json::array();
  for (const auto& r : d.lm) lm.push_back({{"lag", r.lag}, {"chi2", num(r.chi2)}, {"df", r.df}, {"p", num(r.p_value)}});
  j["lm"] = lm;
  return j;
}

// ---- stages ---------------------------------------------------------------

void stage_ingest(StageContext& ctx) {
  const auto& c = ctx.config;
  auto loaded = corpus::load_records(resolve(c, c.records), c.columns);
  for (const auto& w : loaded.warnings) ctx.warnings.push_back(w);
  std::vector<corpus::DocumentRecord> selected = loaded.records;
  if (!c.operators.empty()) selected = corpus::select_subset(loaded.records, c.operators);
  else ctx.warnings.push_back("no operators configured; every record kept");
  if (selected.empty()) throw ValidationError("no record matches the operators");

  corpus::StopwordConfig stop;
  stop.base_list = c.base_stopwords ? corpus::read_word_list(resolve(c, *c.base_stopwords)) : corpus::smart_stoplist();
  stop.custom_list =
      c.custom_stopwords ? corpus::read_word_list(resolve(c, *c.custom_stopwords)) : corpus::default_custom_stoplist();

  std::vector<std::pair<std::string, std::vector<std::string>>> docs;
  for (const auto& r : selected) docs.emplace_back(r.id, corpus::preprocess(r.abstract, stop));
  const auto processed = corpus::build_matrix(docs);

  std::map<std::string, const corpus::DocumentRecord*> by_id;
  for (const auto& r : selected) by_id[r.id] = &r;
  std::vector<corpus::DocumentRecord> aligned;
  for (const auto& id : processed.doc_ids) aligned.push_back(*by_id.at(id));
  if (!processed.dropped_ids.empty())
    ctx.warnings.push_back(fmt::format("{} document(s) empty after cleaning were dropped", processed.dropped_ids.size()));

  corpus::write_corpus_archive(processed, ctx.path("corpus"));
  for (const char* f : {"corpus/vocabulary.txt", "corpus/documents.txt", "corpus/counts.tsv", "corpus/manifest.json"})
    ctx.adopt(f);
  corpus::write_records_table(aligned, ctx.path("records.tsv"));
  ctx.adopt("records.tsv");

  ordered_json j;
  j["rows_read"] = loaded.rows_read;
  j["dropped_empty_abstract"] = loaded.dropped_empty_abstract;
  j["dropped_out_of_range_year"] = loaded.dropped_out_of_range_year;
  j["loaded"] = loaded.records.size();
  j["selected"] = selected.size();
  j["documents"] = processed.num_docs();
  j["terms"] = processed.num_terms();
  j["tokens"] = processed.num_tokens();
  j["dropped_empty_documents"] = processed.dropped_ids;
  j["operators"] = c.operators;
  j["warnings"] = ctx.warnings;
  ctx.write_json("ingest.json", j);
}

void stage_select_k(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto corpus = load_corpus(ctx);
  const auto records = load_records(ctx);
  topics::KScanOptions o;
  o.k_min = c.topics.k_min;
  o.k_max = c.topics.k_max;
  o.coherence_top_words = c.topics.top_words;
  o.fit = fit_options(c);
  const auto rep = topics::k_scan(corpus, design_for(c, records), o);
  ordered_json rows = ordered_json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"K", r.K},
                    {"coherence", num(r.coherence)},
                    {"exclusivity", num(r.exclusivity)},
                    {"ser", num(r.ser)},
                    {"delta_ser", opt(r.delta_ser)},
                    {"weighted_delta_ser", opt(r.weighted_delta_ser)},
                    {"improvement", r.improvement},
                    {"highlight", r.highlight},
                    {"iterations", r.iterations_used}});
  ordered_json j;
  j["top_words"] = c.topics.top_words;
  j["rows"] = rows;
  j["highlighted_k"] = rep.highlighted_k ? json(*rep.highlighted_k) : json(nullptr);
  ctx.write_json("select_k.json", j);
}

void stage_fit_topics(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto corpus = load_corpus(ctx);
  const auto records = load_records(ctx);
  const auto design = design_for(c, records);
  const auto fit = topics::fit(corpus, design, c.topics.K, fit_options(c));
  if (!fit.converged)
    ctx.warnings.push_back(fmt::format("topic model stopped at the iteration cap ({})", fit.iterations_used));
  topics::write_fit_archive(fit, ctx.path("topics/fit.json"), config_hash(c));
  ctx.adopt("topics/fit.json");

  const auto quality = topics::coherence_exclusivity(fit.beta, corpus, c.topics.top_words);
  const auto prob = topics::top_words(fit.beta, c.topics.top_words, topics::RankMetric::HighestProb);
  const auto frex = topics::top_words(fit.beta, c.topics.top_words, topics::RankMetric::Frex);
  auto words = [&](const std::vector<int>& idx) {
    std::vector<std::string> w;
    for (int i : idx) w.push_back(corpus.vocabulary[static_cast<std::size_t>(i)]);
    return w;
  };
  ordered_json tops = ordered_json::array();
  for (int k = 0; k < fit.K; ++k)
    tops.push_back({{"topic", k + 1},
                    {"prevalence", fit.theta.col(k).mean()},
                    {"coherence", num(quality.coherence[static_cast<std::size_t>(k)])},
                    {"exclusivity", num(quality.exclusivity[static_cast<std::size_t>(k)])},
                    {"highest_prob", words(prob[static_cast<std::size_t>(k)])},
                    {"frex", words(frex[static_cast<std::size_t>(k)])}});
  ordered_json effects = ordered_json::array();
  for (const auto& name : design.names) {
    for (const auto& e : topics::estimate_effect(fit.theta, design, name))
      effects.push_back({{"topic", e.topic + 1},
                         {"covariate", e.covariate},
                         {"estimate", num(e.estimate)},
                         {"std_error", num(e.std_error)},
                         {"ci_low", num(e.ci_low)},
                         {"ci_high", num(e.ci_high)},
                         {"method", e.method}});
  }
  ordered_json j;
  j["K"] = fit.K;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations_used;
  j["bound_trace"] = fit.bound_trace;
  j["covariates"] = design.names;
  j["encoding_note"] = design.encoding_note;
  j["topics"] = tops;
  j["effects"] = effects;
  ctx.write_json("topics/summary.json", j);
}

void stage_trends(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto fit = load_fit(ctx);
  const auto records = load_records(ctx);
  if (static_cast<Eigen::Index>(records.size()) != fit.theta.rows())
    throw ValidationError("records and topic fit are not aligned; rerun 'fit-topics'");
  const auto years = years_of(records);
  const auto cmap = load_category_map(c, fit.K);

  const auto topic_series = trend::yearly_prevalence(fit.theta, years);
  ordered_json j;
  j["topic_series"] = series_json(topic_series);
  if (!topic_series.missing_years.empty())
    ctx.warnings.push_back(fmt::format("{} year(s) without documents", topic_series.missing_years.size()));

  MatrixXd doc_values = fit.theta;
  std::vector<std::string> labels = topic_series.labels;
  if (!cmap.empty()) {
    const auto cs = trend::yearly_prevalence(fit.theta, years, cmap);
    ordered_json sj = series_json(cs);
    ordered_json mj = ordered_json::object();
    for (const auto& [k, v] : cmap) mj[std::to_string(k + 1)] = v;
    sj["category_map"] = mj;
    j["category_series"] = sj;
    std::tie(doc_values, labels) = trend::category_shares(fit.theta, cmap);
  } else {
    j["category_series"] = nullptr;
  }

  // Distribution shift of one series between earlier and later documents.
  const std::string label = c.trends.ks_series.empty() ? labels.front() : c.trends.ks_series;
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw ValidationError(fmt::format("trends: unknown ks_series '{}'", label));
  const auto col = it - labels.begin();
  const auto [ymin, ymax] = std::minmax_element(years.begin(), years.end());
  const int split = c.trends.ks_split_year ? c.trends.ks_split_year : (*ymin + *ymax + 1) / 2;
  std::vector<double> early, late;
  for (std::size_t d = 0; d < years.size(); ++d)
    (years[d] < split ? early : late).push_back(doc_values(static_cast<Eigen::Index>(d), col));
  if (early.empty() || late.empty()) throw ValidationError(fmt::format("trends: split year {} leaves an empty sample", split));
  const auto ab = trend::ks_dominance(early, late);
  const auto ba = trend::ks_dominance(late, early);
  j["ks"] = {{"series", label},
             {"split_year", split},
             {"early_n", early.size()},
             {"late_n", late.size()},
             {"d_plus_early_minus_late", ab.d_plus},
             {"p_early_minus_late", ab.p_value},
             {"p_early_minus_late_floored", ab.p_floored},
             {"d_plus_late_minus_early", ba.d_plus},
             {"p_late_minus_early", ba.p_value},
             {"p_late_minus_early_floored", ba.p_floored},
             {"d_two_sided", trend::ks_two_sided(early, late)}};
  ordered_json dens = ordered_json::object();
  for (const auto& [name, sample] : {std::pair<std::string, const std::vector<double>*>{"early", &early},
                                     std::pair<std::string, const std::vector<double>*>{"late", &late}}) {
    if (sample->size() < 2 ||
        std::all_of(sample->begin(), sample->end(), [&](double v) { return v == sample->front(); })) {
      dens[name] = nullptr;
      continue;
    }
    const auto pdf = trend::density_curves(*sample, trend::CurveKind::Pdf);
    const auto cdf = trend::density_curves(*sample, trend::CurveKind::Cdf);
    dens[name] = {{"bandwidth", pdf.bandwidth}, {"x", pdf.x}, {"pdf", pdf.y}, {"cdf_x", cdf.x}, {"cdf", cdf.y}};
  }
  j["density"] = dens;

  const auto tq = trend::top_quantile_series(fit.theta, years, c.trends.polynomial_degree);
  j["top_quantile"] = {{"years", tq.years},
                       {"values", tq.values},
                       {"doc_counts", tq.doc_counts},
                       {"degree", tq.trend.degree},
                       {"x_origin", tq.trend.x_origin},
                       {"coefficients", tq.trend.coefficients},
                       {"fitted", tq.trend.fitted}};
  ctx.write_json("trends.json", j);
}

void stage_unitroot(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto s = analysis_series(ctx);
  const int lag = c.trends.lag ? *c.trends.lag : trend::newey_west_lag(static_cast<int>(s.years.size()));
  ordered_json series = ordered_json::array();
  for (const auto& label : s.labels) {
    const auto col = s.column_for_testing(label);
    ordered_json reports = ordered_json::array();
    for (const auto& r : trend::unit_root_battery(col, c.trends.adf_max_lag, lag)) {
      const char* censor = r.p_value.censor == trend::Censor::Below   ? "below"
                           : r.p_value.censor == trend::Censor::Above ? "above"
                                                                      : "none";
      reports.push_back({{"test", trend::to_string(r.test)},
                         {"model_type", r.model_type ? json(trend::to_string(*r.model_type)) : json(nullptr)},
                         {"lag", r.lag},
                         {"statistic", num(r.statistic)},
                         {"p_value", num(r.p_value.value)},
                         {"p_censor", censor},
                         {"p_text", r.p_value.str()},
                         {"regression_t", num(r.regression_t)},
                         {"note", r.note}});
    }
    series.push_back({{"label", label}, {"reports", reports}});
  }
  ordered_json j;
  j["length"] = s.years.size();
  j["adf_max_lag"] = c.trends.adf_max_lag;
  j["pp_kpss_lag"] = lag;
  j["series"] = series;
  ctx.write_json("unitroot.json", j);
}

void stage_regress(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto fit = load_fit(ctx);
  const auto records = load_records(ctx);
  if (static_cast<Eigen::Index>(records.size()) != fit.theta.rows())
    throw ValidationError("records and topic fit are not aligned; rerun 'fit-topics'");
  std::vector<int> topic_list = c.regression.topics;
  if (topic_list.empty())
    for (int k = 1; k <= fit.K; ++k) topic_list.push_back(k);
  ordered_json fits = ordered_json::array();
  for (int k : topic_list) {
    if (k > fit.K) throw ValidationError(fmt::format("regress: topic {} exceeds K = {}", k, fit.K));
    std::vector<citation::CitationRow> rows;
    for (std::size_t d = 0; d < records.size(); ++d) {
      const auto& r = records[d];
      const double ysp = citation::years_since_publication(r.year, c.regression.reference_year);
      if (ysp <= 0) throw ValidationError(fmt::format("regress: record '{}' published after the reference year", r.id));
      rows.push_back({static_cast<double>(r.citation_count), ysp, fit.theta(static_cast<Eigen::Index>(d), k - 1),
                      r.open_access, r.corresponding_author.value_or(""), r.year, r.journal});
    }
    for (const auto& tname : c.regression.transforms) {
      citation::RegressionOptions o;
      o.transform = tname == "LogCY" ? citation::Transform::LogCY
                    : tname == "Log1pCY" ? citation::Transform::Log1pCY
                                         : citation::Transform::IHS;
      const auto f = citation::fit_citation_model(rows, o);
      ordered_json coefs = ordered_json::array();
      for (const auto& cf : f.coefficients)
        coefs.push_back({{"name", cf.name}, {"estimate", num(cf.estimate)}, {"std_error", num(cf.std_error)}});
      fits.push_back({{"topic", k},
                      {"transform", tname},
                      {"label", citation::to_string(o.transform)},
                      {"n", f.n},
                      {"dropped", f.dropped},
                      {"clusters", f.clusters},
                      {"parameters", f.parameters},
                      {"r2", num(f.r2)},
                      {"within_r2", num(f.within_r2)},
                      {"fixed_effects", f.fixed_effects},
                      {"coefficients", coefs},
                      {"omitted", f.omitted}});
    }
  }
  ordered_json j;
  j["reference_year"] = c.regression.reference_year;
  j["fits"] = fits;
  ctx.write_json("regress.json", j);
}

void stage_cointegration(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto s = multivar_series(ctx);
  const auto jo = multivar::cointegration(s, multivar::CointMethod::Johansen, c.multivar.lags, det_spec(c));
  ordered_json rows = ordered_json::array();
  for (const auto& r : jo.johansen)
    rows.push_back({{"rank", r.rank},
                    {"parameters", r.parameters},
                    {"log_likelihood", num(r.log_likelihood)},
                    {"eigenvalue", opt(r.eigenvalue)},
                    {"trace", opt(r.trace)},
                    {"crit_5", opt(r.crit_5)},
                    {"crit_1", opt(r.crit_1)}});
  ordered_json j;
  j["variables"] = s.names;
  j["log_levels"] = c.multivar.log_levels;
  j["johansen"] = {{"deterministic", multivar::to_string(jo.det)},
                   {"lags", jo.lags},
                   {"effective_sample", jo.effective_sample},
                   {"rows", rows},
                   {"selected_rank", jo.selected_rank ? json(*jo.selected_rank) : json(nullptr)},
                   {"source", jo.critical_value_source}};
  const int eg_lag = std::max(0, c.multivar.lags - 1);
  if (s.dims() <= 6) {
    const auto eg = multivar::cointegration(s, multivar::CointMethod::EngleGranger, eg_lag);
    const auto& e = *eg.engle_granger;
    j["engle_granger"] = {{"lag", e.lag},
                          {"dependent", s.names.front()},
                          {"first_stage", vector_to_json(e.first_stage)},
                          {"first_stage_std_errors", vector_to_json(e.first_stage_std_errors)},
                          {"r2", num(e.r2)},
                          {"statistic", num(e.statistic)},
                          {"crit_1", e.crit_1},
                          {"crit_5", e.crit_5},
                          {"crit_10", e.crit_10},
                          {"source", eg.critical_value_source}};
  } else {
    j["engle_granger"] = nullptr;
  }
  ctx.write_json("cointegration.json", j);
}

void stage_var(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto s = multivar_series(ctx);
  const auto sel = multivar::select_lag(s, c.multivar.max_lag);
  ordered_json rows = ordered_json::array();
  for (const auto& r : sel.rows)
    rows.push_back({{"lag", r.lag},
                    {"log_likelihood", num(r.log_likelihood)},
                    {"lr", opt(r.lr)},
                    {"df", r.df ? json(*r.df) : json(nullptr)},
                    {"p", opt(r.p_value)},
                    {"fpe", num(r.fpe)},
                    {"aic", num(r.aic)},
                    {"hqic", num(r.hqic)},
                    {"sbic", num(r.sbic)}});
  const auto m = multivar::fit_var(s, c.multivar.lags);
  ordered_json j;
  j["variables"] = s.names;
  j["log_levels"] = c.multivar.log_levels;
  j["lag_selection"] = {{"effective_sample", sel.effective_sample},
                        {"rows", rows},
                        {"winners",
                         {{"lr", sel.lr_winner},
                          {"fpe", sel.fpe_winner},
                          {"aic", sel.aic_winner},
                          {"hqic", sel.hqic_winner},
                          {"sbic", sel.sbic_winner}}}};
  j["model"] = {{"p", m.p},
                {"effective_sample", m.effective_length()},
                {"intercept", vector_to_json(m.intercept)},
                {"coefs", matrices_json(m.coefs)},
                {"std_errors", matrix_to_json(m.coef_std_errors)},
                {"sigma_u", matrix_to_json(m.sigma_u)},
                {"log_likelihood", num(m.log_likelihood)}};
  j["diagnostics"] = diagnostics_json(multivar::diagnostics(m));
  ctx.write_json("var.json", j);
}

void stage_vecm(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto s = multivar_series(ctx);
  const auto v = multivar::fit_vecm(s, c.multivar.lags, c.multivar.vecm_rank, det_spec(c));
  ordered_json j;
  j["variables"] = s.names;
  j["log_levels"] = c.multivar.log_levels;
  j["p"] = v.p;
  j["rank"] = v.rank;
  j["deterministic"] = multivar::to_string(v.det);
  j["alpha"] = matrix_to_json(v.alpha);
  j["beta"] = matrix_to_json(v.beta);
  j["gamma"] = matrices_json(v.gamma);
  j["intercept"] = vector_to_json(v.intercept);
  j["sigma_u"] = matrix_to_json(v.sigma_u);
  j["log_likelihood"] = num(v.log_likelihood);
  j["unit_moduli"] = v.unit_root_count();
  j["johansen_eigenvalues"] = v.johansen_eigenvalues;
  j["diagnostics"] = diagnostics_json(multivar::diagnostics(v, s));
  ctx.write_json("vecm.json", j);
}

void stage_granger(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto s = multivar_series(ctx);
  const auto mode = c.multivar.granger_mode == "strict" ? multivar::GrangerMode::StrictTodaYamamoto
                                                        : multivar::GrangerMode::AllLags;
  const auto g = multivar::granger_wald(s, c.multivar.lags, c.multivar.d_max, mode);
  ordered_json rows = ordered_json::array();
  for (const auto& r : g.rows)
    rows.push_back({{"equation", r.equation}, {"excluded", r.excluded}, {"chi2", num(r.chi2)}, {"df", r.df},
                    {"p", num(r.p_value)}});
  ordered_json j;
  j["variables"] = s.names;
  j["log_levels"] = c.multivar.log_levels;
  j["p"] = g.p;
  j["d_max"] = g.d_max;
  j["mode"] = c.multivar.granger_mode;
  j["rows"] = rows;
  ctx.write_json("granger.json", j);
}

void stage_irf(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto s = multivar_series(ctx);
  const auto boot = bootstrap_spec(c);
  const auto m = multivar::fit_var(s, c.multivar.lags);
  const auto ir = multivar::impulse_response(m, c.multivar.horizon, true, boot);
  ordered_json j;
  j["ordering"] = s.names;
  j["log_levels"] = c.multivar.log_levels;
  j["horizon"] = c.multivar.horizon;
  j["bootstrap"] = boot ? boot->replications : 0;
  j["level"] = c.multivar.level;
  j["var"] = {{"orthogonalized", ir.orthogonalized},
              {"note", ir.note},
              {"response", matrices_json(ir.response)},
              {"lower", ir.lower ? matrices_json(*ir.lower) : ordered_json(nullptr)},
              {"upper", ir.upper ? matrices_json(*ir.upper) : ordered_json(nullptr)}};
  const auto v = multivar::fit_vecm(s, c.multivar.lags, c.multivar.vecm_rank, det_spec(c));
  const auto vr = multivar::impulse_response(v, c.multivar.horizon, true, boot);
  j["vecm"] = {{"orthogonalized", vr.orthogonalized},
               {"bands_refused", vr.bands_refused},
               {"note", vr.note},
               {"response", matrices_json(vr.response)}};
  ctx.write_json("irf.json", j);
}

void stage_fevd(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto s = multivar_series(ctx);
  const auto boot = bootstrap_spec(c);
  const auto m = multivar::fit_var(s, c.multivar.lags);
  const auto f = multivar::fevd(m, c.multivar.horizon, boot);
  ordered_json j;
  j["ordering"] = s.names;
  j["log_levels"] = c.multivar.log_levels;
  j["horizon"] = c.multivar.horizon;
  j["bootstrap"] = boot ? boot->replications : 0;
  j["level"] = c.multivar.level;
  j["share"] = matrices_json(f.share);
  j["std_error"] = f.std_error ? matrices_json(*f.std_error) : ordered_json(nullptr);
  j["lower"] = f.lower ? matrices_json(*f.lower) : ordered_json(nullptr);
  j["upper"] = f.upper ? matrices_json(*f.upper) : ordered_json(nullptr);
  ctx.write_json("fevd.json", j);
}

void stage_embed(StageContext& ctx) {
  const auto& c = ctx.config;
  const auto corpus = load_corpus(ctx);
  const auto records = load_records(ctx);
  embed::TrainOptions o;
  o.dim = c.embedding.dim;
  o.iterations = c.embedding.iterations;
  o.negative = c.embedding.negative;
  o.seed = substream_seed(c.seed, "embedding");
  const auto model = embed::train_pvdbow(corpus, o);
  embed::write_model_archive(model, ctx.path("embedding/model.json"));
  ctx.adopt("embedding/model.json");
  const auto years = years_of(records);
  const auto sim = embed::similarity_series(model.doc_vectors, years, !c.embedding.raw_inner_product);
  ordered_json pts = ordered_json::array();
  for (const auto& p : sim.points) pts.push_back({{"year", p.year}, {"value", num(p.value)}, {"docs", p.docs}});
  ordered_json j;
  j["dim"] = model.dim;
  j["iterations"] = model.iterations;
  j["similarity"] = sim.normalized ? "cosine" : "raw inner product";
  j["epoch_loss"] = model.epoch_loss;
  j["points"] = pts;
  j["omitted_years"] = sim.omitted_years;
  ctx.write_json("similarity.json", j);
}

void stage_report(StageContext& ctx) {
  const auto dir = out_dir(ctx.config);
  for (const auto& p : emit_report(dir, ReportFormat::Tables)) ctx.adopt(p);
  for (const auto& p : emit_report(dir, ReportFormat::PlotData)) ctx.adopt(p);
}

void dispatch(StageContext& ctx, const std::string& stage) {
  if (stage == "ingest") stage_ingest(ctx);
  else if (stage == "select-k") stage_select_k(ctx);
  else if (stage == "fit-topics") stage_fit_topics(ctx);
  else if (stage == "trends") stage_trends(ctx);
  else if (stage == "unitroot") stage_unitroot(ctx);
  else if (stage == "regress") stage_regress(ctx);
  else if (stage == "cointegration") stage_cointegration(ctx);
  else if (stage == "var") stage_var(ctx);
  else if (stage == "vecm") stage_vecm(ctx);
  else if (stage == "granger") stage_granger(ctx);
  else if (stage == "irf") stage_irf(ctx);
  else if (stage == "fevd") stage_fevd(ctx);
  else if (stage == "embed") stage_embed(ctx);
  else if (stage == "report") stage_report(ctx);
  else throw ValidationError(fmt::format("unknown stage '{}'", stage));
}

std::size_t stage_rank(const std::string& s) {
  const auto& o = stage_order();
  return static_cast<std::size_t>(std::find(o.begin(), o.end(), s) - o.begin());
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  ordered_json arts = ordered_json::array();
  for (const auto& a : m.artifacts)
    arts.push_back({{"stage", a.stage}, {"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  ordered_json j;
  j["format_version"] = 1;
  j["seed"] = m.seed;
  j["config_hash"] = m.config_hash;
  j["artifacts"] = arts;
  j["warnings"] = m.warnings;
  write_text_file(dir / "manifest.json", j.dump(1) + '\n');
}

Manifest execute(const PipelineConfig& c, const std::string& stage, Manifest m) {
  const auto dir = out_dir(c);
  StageContext ctx(c, stage);
  try {
    dispatch(ctx, stage);
  } catch (const std::exception& e) {
    ordered_json f{{"stage", stage}, {"error", e.what()}};
    write_text_file(dir / "FAILED", f.dump(1) + '\n');
    write_manifest(dir, m);
    throw StageError(stage, e.what());
  }
  m.artifacts.erase(std::remove_if(m.artifacts.begin(), m.artifacts.end(),
                                   [&](const ArtifactEntry& a) { return a.stage == stage; }),
                    m.artifacts.end());
  for (const auto& rel : ctx.written())
    m.artifacts.push_back({stage, rel, sha256_file(dir / rel), fs::file_size(dir / rel)});
  std::stable_sort(m.artifacts.begin(), m.artifacts.end(), [](const ArtifactEntry& a, const ArtifactEntry& b) {
    const auto ra = stage_rank(a.stage), rb = stage_rank(b.stage);
    return ra != rb ? ra < rb : a.path < b.path;
  });
  for (const auto& w : ctx.warnings) m.warnings.push_back(stage + ": " + w);
  write_manifest(dir, m);
  return m;
}

}  // namespace

Manifest read_manifest(const fs::path& output_dir) {
  const auto p = output_dir / "manifest.json";
  if (!fs::exists(p)) throw ValidationError(fmt::format("no manifest in '{}'", output_dir.string()));
  const auto j = json::parse(read_text_file(p));
  Manifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& a : j.at("artifacts"))
    m.artifacts.push_back({a.at("stage").get<std::string>(), a.at("path").get<std::string>(),
                           a.at("sha256").get<std::string>(), a.at("bytes").get<std::uintmax_t>()});
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  return m;
}

Manifest run_stage(const PipelineConfig& c, const std::string& stage) {
  validate(c);
  const auto dir = out_dir(c);
  fs::create_directories(dir);
  Manifest m;
  if (fs::exists(dir / "manifest.json")) m = read_manifest(dir);
  if (m.config_hash != config_hash(c)) {
    // Artifacts from a different configuration must not be mixed in.
    m = Manifest{};
  }
  m.seed = c.seed;
  m.config_hash = config_hash(c);
  m.warnings.erase(std::remove_if(m.warnings.begin(), m.warnings.end(),
                                  [&](const std::string& w) { return w.rfind(stage + ": ", 0) == 0; }),
                   m.warnings.end());
  return execute(c, stage, m);
}

Manifest run(const PipelineConfig& c) {
  validate(c);
  const auto dir = out_dir(c);
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  Manifest m;
  m.seed = c.seed;
  m.config_hash = config_hash(c);
  ordered_json timings = ordered_json::array();
  auto flush_timings = [&] { write_text_file(dir / "timings.json", timings.dump(1) + '\n'); };
  for (const auto& stage : c.stages) {
    const auto start = std::chrono::steady_clock::now();
    try {
      m = execute(c, stage, m);
    } catch (...) {
      flush_timings();
      throw;
    }
    const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
    timings.push_back({{"stage", stage}, {"seconds", secs.count()}});
  }
  flush_timings();
  return m;
}

}  // namespace topictrend::pipeline
