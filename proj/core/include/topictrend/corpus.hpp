#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace topictrend::corpus {

enum class JournalType { Top5, GeneralInterest, Field, IndustrialOrganization, Antitrust };
enum class PaperType { Theory, Empirics, Experiment, Policy };

std::string_view to_string(JournalType t);
std::string_view to_string(PaperType t);
/// Accepts canonical names and the usual abbreviations ("T5", "GI", "IO",
/// "AT", "Ind. Org.", ...); case and punctuation insensitive.
std::optional<JournalType> parse_journal_type(std::string_view label);
std::optional<PaperType> parse_paper_type(std::string_view label);

struct DocumentRecord {
  std::string id;
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;
  int year = 0;
  std::string journal;
  JournalType journal_type = JournalType::Field;
  long long citation_count = 0;
  bool open_access = false;
  std::optional<std::string> corresponding_author;
  std::optional<PaperType> paper_type;
};

/// Maps record fields onto input columns (CSV header names or JSON keys).
/// Empty optional columns are simply not read.
struct ColumnSchema {
  std::string id = "id";
  std::string title = "title";
  std::string abstract = "abstract";
  std::string keywords = "keywords";
  std::string year = "year";
  std::string journal = "journal";
  std::string journal_type = "journal_type";
  std::string citations = "citations";
  std::string open_access = "open_access";
  std::string corresponding_author = "corresponding_author";
  /// Used when corresponding_author is missing for a row.
  std::string authors = "authors";
  std::string paper_type = "paper_type";
  char keyword_separator = ';';
  /// 0 = infer from extension (.tsv -> tab, otherwise comma).
  char delimiter = 0;
  int min_year = 2000;
  int max_year = 2021;
};

struct LoadResult {
  std::vector<DocumentRecord> records;
  std::size_t rows_read = 0;
  std::size_t dropped_empty_abstract = 0;
  std::size_t dropped_out_of_range_year = 0;
  std::vector<std::string> warnings;
};

/// Reads a delimiter-separated export (.csv/.tsv) or line-delimited JSON
/// (.jsonl/.ndjson). Throws IoError on unreadable input and ValidationError
/// on duplicate ids, unparsable years or unknown journal type labels.
LoadResult load_records(const std::filesystem::path& path, const ColumnSchema& schema = {});

/// Records whose title, abstract or keywords contain at least one operator.
/// An operator is one or more space-separated stems; each stem must match
/// the beginning of a word, and multi-stem operators must match consecutive
/// words ("bidding ring" matches "bidding rings"; "cartel" matches
/// "cartels" but not "cartography").
std::vector<DocumentRecord> select_subset(const std::vector<DocumentRecord>& records,
                                          const std::vector<std::string>& operators);

/// True when `text` contains the operator under the rules of select_subset.
bool matches_operator(std::string_view text, std::string_view op);

struct StopwordConfig {
  std::set<std::string> base_list;
  std::set<std::string> custom_list;

  bool contains(const std::string& word) const {
    return base_list.contains(word) || custom_list.contains(word);
  }
};

/// The SMART English stop list (571 words), compiled in.
const std::set<std::string>& smart_stoplist();
/// Additional boilerplate and operator stopwords shipped with the library.
const std::set<std::string>& default_custom_stoplist();
StopwordConfig default_stopwords();
/// One word per line; blank lines and lines starting with '#' ignored.
std::set<std::string> read_word_list(const std::filesystem::path& path);

/// UTF-8 text folded to lowercase ASCII: Latin letters with diacritics map
/// to their base letter, other non-ASCII characters are dropped.
std::string fold_ascii(std::string_view text);

/// Lowercase alphabetic tokens. Hyphens survive only between two letters.
std::vector<std::string> tokenize(std::string_view text);

/// Porter (1980) stemmer on a lowercase word.
std::string porter_stem(std::string_view word);

/// tokenize -> drop stopwords -> Porter stem, preserving order.
std::vector<std::string> preprocess(std::string_view text, const StopwordConfig& config);

struct SparseEntry {
  int term = 0;
  int count = 0;
};

struct ProcessedCorpus {
  std::vector<std::string> vocabulary;           // sorted stems
  std::vector<std::vector<SparseEntry>> counts;  // rows sorted by term
  std::vector<std::string> doc_ids;
  std::vector<std::string> dropped_ids;          // empty after cleaning

  std::size_t num_docs() const { return counts.size(); }
  std::size_t num_terms() const { return vocabulary.size(); }
  long long num_tokens() const;
  long long doc_length(std::size_t d) const;
  /// Number of documents containing each term.
  std::vector<int> document_frequency() const;
};

/// Throws ValidationError when every document is empty.
ProcessedCorpus build_matrix(const std::vector<std::pair<std::string, std::vector<std::string>>>& docs);

/// Vocabulary file, sparse triplet file and manifest under `dir`.
void write_corpus_archive(const ProcessedCorpus& corpus, const std::filesystem::path& dir);
ProcessedCorpus read_corpus_archive(const std::filesystem::path& dir);

/// Metadata table aligned with the corpus rows.
void write_records_table(const std::vector<DocumentRecord>& records, const std::filesystem::path& path);
std::vector<DocumentRecord> read_records_table(const std::filesystem::path& path);

/// Parses one delimiter-separated line set (RFC 4180 quoting) into rows.
std::vector<std::vector<std::string>> parse_delimited(std::string_view content, char delimiter);

}  // namespace topictrend::corpus
