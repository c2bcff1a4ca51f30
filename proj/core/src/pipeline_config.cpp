#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "topictrend/pipeline.hpp"
#include "topictrend/table.hpp"

namespace topictrend::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ValidationError(fmt::format("config: '{}' must be an object", where));
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : obj.items())
    if (!allowed.contains(k)) throw ValidationError(fmt::format("config: unknown key '{}{}'", where.empty() ? "" : where + ".", k));
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(fmt::format("config: '{}{}' has the wrong type", where.empty() ? "" : where + ".", key));
  }
}

template <typename T>
void read_optional(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, v, where);
  out = v;
}

char read_char(const json& obj, const char* key, char fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  std::string s;
  read(obj, key, s, where);
  if (s == "\\t" || s == "tab") return '\t';
  if (s.size() != 1) throw ValidationError(fmt::format("config: '{}.{}' must be a single character", where, key));
  return s[0];
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("config: not valid JSON ({})", e.what()));
  }
  allow_keys(j, "", {"records", "columns", "operators", "stopwords", "category_map", "output", "seed", "stages",
                     "topics", "trends", "regression", "multivar", "embedding"});
  PipelineConfig c;
  c.base_dir = base_dir;
  if (!j.contains("records")) throw ValidationError("config: 'records' is required");
  std::string s;
  read(j, "records", s, "");
  c.records = s;
  if (j.contains("columns")) {
    const auto& o = j["columns"];
    allow_keys(o, "columns", {"id", "title", "abstract", "keywords", "year", "journal", "journal_type", "citations",
                              "open_access", "corresponding_author", "authors", "paper_type", "keyword_separator",
                              "delimiter", "min_year", "max_year"});
    auto& cs = c.columns;
    read(o, "id", cs.id, "columns");
    read(o, "title", cs.title, "columns");
    read(o, "abstract", cs.abstract, "columns");
    read(o, "keywords", cs.keywords, "columns");
    read(o, "year", cs.year, "columns");
    read(o, "journal", cs.journal, "columns");
    read(o, "journal_type", cs.journal_type, "columns");
    read(o, "citations", cs.citations, "columns");
    read(o, "open_access", cs.open_access, "columns");
    read(o, "corresponding_author", cs.corresponding_author, "columns");
    read(o, "authors", cs.authors, "columns");
    read(o, "paper_type", cs.paper_type, "columns");
    cs.keyword_separator = read_char(o, "keyword_separator", cs.keyword_separator, "columns");
    cs.delimiter = read_char(o, "delimiter", cs.delimiter, "columns");
    read(o, "min_year", cs.min_year, "columns");
    read(o, "max_year", cs.max_year, "columns");
  }
  read(j, "operators", c.operators, "");
  if (j.contains("stopwords")) {
    const auto& o = j["stopwords"];
    allow_keys(o, "stopwords", {"base", "custom"});
    std::optional<std::string> b, cu;
    read_optional(o, "base", b, "stopwords");
    read_optional(o, "custom", cu, "stopwords");
    if (b) c.base_stopwords = *b;
    if (cu) c.custom_stopwords = *cu;
  }
  std::optional<std::string> cmap;
  read_optional(j, "category_map", cmap, "");
  if (cmap) c.category_map = *cmap;
  if (j.contains("output")) {
    read(j, "output", s, "");
    c.output = s;
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("config: 'seed' must be a non-negative 64-bit integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.stages = stage_order();
  read(j, "stages", c.stages, "");
  for (const auto& s : c.stages)
    if (std::find(stage_order().begin(), stage_order().end(), s) == stage_order().end())
      throw ValidationError(fmt::format("config: unknown stage '{}'", s));

  if (j.contains("topics")) {
    const auto& o = j["topics"];
    allow_keys(o, "topics", {"K", "k_min", "k_max", "max_iterations", "tolerance", "spectral_init", "year_covariate",
                             "journal_type_covariate", "top_words"});
    auto& t = c.topics;
    read(o, "K", t.K, "topics");
    read(o, "k_min", t.k_min, "topics");
    read(o, "k_max", t.k_max, "topics");
    read(o, "max_iterations", t.max_iterations, "topics");
    read(o, "tolerance", t.tolerance, "topics");
    read(o, "spectral_init", t.spectral_init, "topics");
    read(o, "year_covariate", t.year_covariate, "topics");
    read(o, "journal_type_covariate", t.journal_type_covariate, "topics");
    read(o, "top_words", t.top_words, "topics");
  }
  if (j.contains("trends")) {
    const auto& o = j["trends"];
    allow_keys(o, "trends", {"adf_max_lag", "lag", "ks_series", "ks_split_year", "polynomial_degree"});
    auto& t = c.trends;
    read(o, "adf_max_lag", t.adf_max_lag, "trends");
    read_optional(o, "lag", t.lag, "trends");
    read(o, "ks_series", t.ks_series, "trends");
    read(o, "ks_split_year", t.ks_split_year, "trends");
    read(o, "polynomial_degree", t.polynomial_degree, "trends");
  }
  if (j.contains("regression")) {
    const auto& o = j["regression"];
    allow_keys(o, "regression", {"reference_year", "transforms", "topics"});
    read(o, "reference_year", c.regression.reference_year, "regression");
    read(o, "transforms", c.regression.transforms, "regression");
    read(o, "topics", c.regression.topics, "regression");
  }
  if (j.contains("multivar")) {
    const auto& o = j["multivar"];
    allow_keys(o, "multivar", {"variables", "max_lag", "lags", "d_max", "vecm_rank", "deterministic", "horizon",
                               "bootstrap", "level", "granger_mode", "log_levels"});
    auto& m = c.multivar;
    read(o, "variables", m.variables, "multivar");
    read(o, "max_lag", m.max_lag, "multivar");
    read(o, "lags", m.lags, "multivar");
    read(o, "d_max", m.d_max, "multivar");
    read(o, "vecm_rank", m.vecm_rank, "multivar");
    read(o, "deterministic", m.deterministic, "multivar");
    read(o, "horizon", m.horizon, "multivar");
    read(o, "bootstrap", m.bootstrap, "multivar");
    read(o, "level", m.level, "multivar");
    read(o, "granger_mode", m.granger_mode, "multivar");
    read(o, "log_levels", m.log_levels, "multivar");
  }
  if (j.contains("embedding")) {
    const auto& o = j["embedding"];
    allow_keys(o, "embedding", {"dim", "iterations", "negative", "raw_inner_product"});
    read(o, "dim", c.embedding.dim, "embedding");
    read(o, "iterations", c.embedding.iterations, "embedding");
    read(o, "negative", c.embedding.negative, "embedding");
    read(o, "raw_inner_product", c.embedding.raw_inner_product, "embedding");
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError(fmt::format("config file '{}' does not exist", path.string()));
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(read_text_file(path), base);
}

void validate(const PipelineConfig& c) {
  auto must_exist = [&](const std::filesystem::path& p, const char* what) {
    const auto full = resolve(c.base_dir, p);
    if (!std::filesystem::exists(full)) throw ValidationError(fmt::format("{} '{}' does not exist", what, full.string()));
  };
  must_exist(c.records, "records file");
  if (c.base_stopwords) must_exist(*c.base_stopwords, "stopword file");
  if (c.custom_stopwords) must_exist(*c.custom_stopwords, "stopword file");
  if (c.category_map) must_exist(*c.category_map, "category map");
  for (const auto& s : c.stages)
    if (std::find(stage_order().begin(), stage_order().end(), s) == stage_order().end())
      throw ValidationError(fmt::format("config: unknown stage '{}'", s));
  const auto& t = c.topics;
  if (t.K < 2) throw ValidationError("config: topics.K must be at least 2");
  if (t.k_min < 2 || t.k_max < t.k_min) throw ValidationError("config: need 2 <= topics.k_min <= topics.k_max");
  if (t.max_iterations < 1 || !(t.tolerance > 0.0)) throw ValidationError("config: topics.max_iterations and tolerance must be positive");
  if (t.top_words < 1) throw ValidationError("config: topics.top_words must be positive");
  if (c.trends.adf_max_lag < 0 || (c.trends.lag && *c.trends.lag < 0))
    throw ValidationError("config: trend lags must be non-negative");
  if (c.trends.polynomial_degree < 1) throw ValidationError("config: trends.polynomial_degree must be at least 1");
  for (const auto& tr : c.regression.transforms)
    if (tr != "IHS" && tr != "Log1pCY" && tr != "LogCY")
      throw ValidationError(fmt::format("config: unknown citation transform '{}'", tr));
  for (int k : c.regression.topics)
    if (k < 1 || k > t.K) throw ValidationError(fmt::format("config: regression topic {} outside 1..{}", k, t.K));
  const auto& m = c.multivar;
  if (m.lags < 1 || m.max_lag < 1 || m.d_max < 0 || m.vecm_rank < 0 || m.horizon < 0 || m.bootstrap < 0)
    throw ValidationError("config: multivar lags, horizon and bootstrap settings out of range");
  if (!(m.level > 0.0 && m.level < 1.0)) throw ValidationError("config: multivar.level must lie in (0, 1)");
  if (m.deterministic != "constant" && m.deterministic != "none")
    throw ValidationError("config: multivar.deterministic must be 'constant' or 'none'");
  if (m.granger_mode != "all_lags" && m.granger_mode != "strict")
    throw ValidationError("config: multivar.granger_mode must be 'all_lags' or 'strict'");
  if (c.embedding.dim < 2 || c.embedding.iterations < 1 || c.embedding.negative < 1)
    throw ValidationError("config: embedding settings out of range");
}

std::string PipelineConfig::canonical_json() const {
  ordered_json j;
  // Paths relative to the config directory keep the hash independent of where
  // the project is checked out.
  const auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(base_dir).generic_string(); };
  j["records"] = rel(records);
  const auto& cs = columns;
  j["columns"] = {{"id", cs.id},
                  {"title", cs.title},
                  {"abstract", cs.abstract},
                  {"keywords", cs.keywords},
                  {"year", cs.year},
                  {"journal", cs.journal},
                  {"journal_type", cs.journal_type},
                  {"citations", cs.citations},
                  {"open_access", cs.open_access},
                  {"corresponding_author", cs.corresponding_author},
                  {"authors", cs.authors},
                  {"paper_type", cs.paper_type},
                  {"keyword_separator", std::string(1, cs.keyword_separator)},
                  {"delimiter", cs.delimiter ? std::string(1, cs.delimiter) : std::string()},
                  {"min_year", cs.min_year},
                  {"max_year", cs.max_year}};
  j["operators"] = operators;
  j["stopwords"] = {{"base", base_stopwords ? rel(*base_stopwords) : "builtin"},
                    {"custom", custom_stopwords ? rel(*custom_stopwords) : "builtin"}};
  j["category_map"] = category_map ? rel(*category_map) : "";
  j["seed"] = seed;
  j["topics"] = {{"K", topics.K},
                 {"k_min", topics.k_min},
                 {"k_max", topics.k_max},
                 {"max_iterations", topics.max_iterations},
                 {"tolerance", topics.tolerance},
                 {"spectral_init", topics.spectral_init},
                 {"year_covariate", topics.year_covariate},
                 {"journal_type_covariate", topics.journal_type_covariate},
                 {"top_words", topics.top_words}};
  j["trends"] = {{"adf_max_lag", trends.adf_max_lag},
                 {"lag", trends.lag ? json(*trends.lag) : json(nullptr)},
                 {"ks_series", trends.ks_series},
                 {"ks_split_year", trends.ks_split_year},
                 {"polynomial_degree", trends.polynomial_degree}};
  j["regression"] = {{"reference_year", regression.reference_year},
                     {"transforms", regression.transforms},
                     {"topics", regression.topics}};
  j["multivar"] = {{"variables", multivar.variables}, {"max_lag", multivar.max_lag},
                   {"lags", multivar.lags},           {"d_max", multivar.d_max},
                   {"vecm_rank", multivar.vecm_rank}, {"deterministic", multivar.deterministic},
                   {"horizon", multivar.horizon},     {"bootstrap", multivar.bootstrap},
                   {"level", multivar.level},         {"granger_mode", multivar.granger_mode},
                   {"log_levels", multivar.log_levels}};
  j["embedding"] = {{"dim", embedding.dim},
                    {"iterations", embedding.iterations},
                    {"negative", embedding.negative},
                    {"raw_inner_product", embedding.raw_inner_product}};
  return j.dump();
}

}  // namespace topictrend::pipeline
