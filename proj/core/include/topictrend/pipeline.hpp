#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topictrend/corpus.hpp"
#include "topictrend/error.hpp"

namespace topictrend::pipeline {

/// Stage names double as CLI subcommands.
inline const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> order{"ingest", "select-k",   "fit-topics",    "trends", "unitroot",
                                              "regress", "cointegration", "var",        "vecm",   "granger",
                                              "irf",    "fevd",       "embed",         "report"};
  return order;
}

struct TopicsConfig {
  int K = 21;
  int k_min = 5;
  int k_max = 40;
  int max_iterations = 75;
  double tolerance = 1e-5;
  bool spectral_init = false;
  bool year_covariate = true;
  bool journal_type_covariate = true;
  int top_words = 10;
};

struct TrendsConfig {
  int adf_max_lag = 2;
  std::optional<int> lag;  // PP and KPSS bandwidth; Newey-West rule when absent
  std::string ks_series;   // category or topic label; first series when empty
  int ks_split_year = 0;   // 0: midpoint of the observed years
  int polynomial_degree = 3;
};

struct RegressionConfig {
  int reference_year = 2021;
  std::vector<std::string> transforms{"IHS", "Log1pCY", "LogCY"};
  std::vector<int> topics;  // 1-based; empty = all
};

struct MultivarConfig {
  std::vector<std::string> variables;  // series labels in Cholesky order
  int max_lag = 4;
  int lags = 2;
  int d_max = 1;
  int vecm_rank = 1;
  std::string deterministic = "constant";
  int horizon = 10;
  int bootstrap = 500;
  double level = 0.95;
  std::string granger_mode = "all_lags";
  bool log_levels = false;  // take logs of the shares before modelling
};

struct EmbeddingConfig {
  int dim = 50;
  int iterations = 20;
  int negative = 5;
  bool raw_inner_product = false;
};

struct PipelineConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::filesystem::path records;
  corpus::ColumnSchema columns;
  std::vector<std::string> operators;
  std::optional<std::filesystem::path> base_stopwords;    // built-in SMART list when absent
  std::optional<std::filesystem::path> custom_stopwords;  // built-in custom list when absent
  std::optional<std::filesystem::path> category_map;
  std::filesystem::path output{"out"};
  std::uint64_t seed = 1;
  std::vector<std::string> stages;  // in execution order
  TopicsConfig topics;
  TrendsConfig trends;
  RegressionConfig regression;
  MultivarConfig multivar;
  EmbeddingConfig embedding;

  /// Canonical JSON of everything that influences results. The output
  /// directory and the stage list are excluded; paths are relative to
  /// `base_dir`.
  std::string canonical_json() const;
};

/// Parses a JSON config. Unknown keys are rejected.
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Throws ValidationError naming the offending key or path.
void validate(const PipelineConfig& config);

struct ArtifactEntry {
  std::string stage;
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<ArtifactEntry> artifacts;
  std::vector<std::string> warnings;
};

/// A stage failed; `stage()` names it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Runs one stage against the artifacts already in the output directory and
/// merges its entries into manifest.json. Throws StageError on failure after
/// writing a FAILED marker.
Manifest run_stage(const PipelineConfig& config, const std::string& stage);

/// Runs every configured stage in order, starting from an empty manifest.
/// Per-stage wall times go to timings.json so manifest.json stays
/// reproducible.
Manifest run(const PipelineConfig& config);

Manifest read_manifest(const std::filesystem::path& output_dir);

enum class ReportFormat { Tables, PlotData };

/// Renders stage artifacts in `output_dir` as delimited tables or long-form
/// plot data (series, x, y, band_low, band_high). `sections` empty means
/// every section present; a requested section that is absent throws
/// ValidationError. Returns written paths relative to `output_dir`.
std::vector<std::string> emit_report(const std::filesystem::path& output_dir, ReportFormat format,
                                     const std::vector<std::string>& sections = {});

}  // namespace topictrend::pipeline
