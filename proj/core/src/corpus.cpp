#include "topictrend/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "topictrend/error.hpp"

namespace topictrend::corpus {

namespace {

std::string normalize_label(std::string_view s) {
  std::string out;
  for (unsigned char c : s)
    if (std::isalnum(c)) out += static_cast<char>(std::tolower(c));
  return out;
}

// Base letters for U+00C0..U+017F.
constexpr std::array<const char*, 0x180 - 0xC0> kLatinFold{
    "A",  "A", "A", "A",  "A", "A", "AE", "C", "E", "E", "E", "E",  "I", "I", "I",  "I",   // C0-CF
    "D",  "N", "O", "O",  "O", "O", "O",  " ", "O", "U", "U", "U",  "U", "Y", "TH", "ss",  // D0-DF
    "a",  "a", "a", "a",  "a", "a", "ae", "c", "e", "e", "e", "e",  "i", "i", "i",  "i",   // E0-EF
    "d",  "n", "o", "o",  "o", "o", "o",  " ", "o", "u", "u", "u",  "u", "y", "th", "y",   // F0-FF
    "A",  "a", "A", "a",  "A", "a", "C",  "c", "C", "c", "C", "c",  "C", "c", "D",  "d",   // 100-10F
    "D",  "d", "E", "e",  "E", "e", "E",  "e", "E", "e", "E", "e",  "G", "g", "G",  "g",   // 110-11F
    "G",  "g", "G", "g",  "H", "h", "H",  "h", "I", "i", "I", "i",  "I", "i", "I",  "i",   // 120-12F
    "I",  "i", "IJ", "ij", "J", "j", "K", "k", "k", "L", "l", "L",  "l", "L", "l",  "L",   // 130-13F
    "l",  "L", "l", "N",  "n", "N", "n",  "N", "n", "n", "N", "n",  "O", "o", "O",  "o",   // 140-14F
    "O",  "o", "OE", "oe", "R", "r", "R", "r", "R", "r", "S", "s",  "S", "s", "S",  "s",   // 150-15F
    "S",  "s", "T", "t",  "T", "t", "T",  "t", "U", "u", "U", "u",  "U", "u", "U",  "u",   // 160-16F
    "U",  "u", "U", "u",  "W", "w", "Y",  "y", "Y", "Z", "z", "Z",  "z", "Z", "z",  "s",   // 170-17F
};

std::string_view fold_code_point(char32_t cp) {
  if (cp >= 0xC0 && cp < 0x180) return kLatinFold[cp - 0xC0];
  if (cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x202F || cp == 0x3000) return " ";
  if (cp >= 0x2010 && cp <= 0x2015) return "-";
  if (cp == 0x2018 || cp == 0x2019) return "'";
  if (cp == 0x201C || cp == 0x201D) return "\"";
  return {};
}

bool is_alpha(char c) { return c >= 'a' && c <= 'z'; }

std::vector<std::string> plain_words(std::string_view text) {
  const std::string folded = fold_ascii(text);
  std::vector<std::string> words;
  std::string cur;
  for (char c : folded) {
    if (is_alpha(c)) {
      cur += c;
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::vector<std::string> split_operator(std::string_view op) {
  std::vector<std::string> parts;
  std::istringstream in{std::string(op)};
  std::string part;
  while (in >> part) {
    auto words = plain_words(part);
    parts.insert(parts.end(), words.begin(), words.end());
  }
  return parts;
}

bool words_match(const std::vector<std::string>& words, const std::vector<std::string>& stems) {
  if (stems.empty() || words.size() < stems.size()) return false;
  for (std::size_t i = 0; i + stems.size() <= words.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < stems.size() && ok; ++j) ok = words[i + j].starts_with(stems[j]);
    if (ok) return true;
  }
  return false;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<long long> parse_integer(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec == std::errc{} && ptr == t.data() + t.size()) return v;
  // Accept integral floating text such as "2005.0".
  double d = 0.0;
  auto [p2, ec2] = std::from_chars(t.data(), t.data() + t.size(), d);
  if (ec2 == std::errc{} && p2 == t.data() + t.size() && d == static_cast<double>(static_cast<long long>(d)))
    return static_cast<long long>(d);
  return std::nullopt;
}

bool parse_flag(std::string_view s) {
  const std::string t = normalize_label(s);
  static const std::unordered_set<std::string> falsy{"", "0", "false", "no", "n", "f", "none", "na", "closed"};
  return !falsy.contains(t);
}

// A record field source: CSV row keyed by header or a JSON object.
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual bool has(const std::string& key) const = 0;
  virtual std::string get(const std::string& key) const = 0;
  virtual std::vector<std::string> get_list(const std::string& key, char sep) const {
    std::vector<std::string> out;
    std::string raw = get(key);
    std::size_t start = 0;
    while (start <= raw.size()) {
      auto pos = raw.find(sep, start);
      if (pos == std::string::npos) pos = raw.size();
      auto item = trim(std::string_view(raw).substr(start, pos - start));
      if (!item.empty()) out.push_back(std::move(item));
      start = pos + 1;
    }
    return out;
  }
};

class RowSource : public FieldSource {
 public:
  RowSource(const std::map<std::string, std::size_t>& header, const std::vector<std::string>& row)
      : header_(header), row_(row) {}
  bool has(const std::string& key) const override { return !key.empty() && header_.contains(key); }
  std::string get(const std::string& key) const override {
    if (!has(key)) return {};
    auto idx = header_.at(key);
    return idx < row_.size() ? row_[idx] : std::string{};
  }

 private:
  const std::map<std::string, std::size_t>& header_;
  const std::vector<std::string>& row_;
};

class JsonSource : public FieldSource {
 public:
  explicit JsonSource(const nlohmann::json& obj) : obj_(obj) {}
  bool has(const std::string& key) const override { return !key.empty() && obj_.contains(key); }
  std::string get(const std::string& key) const override {
    if (!has(key)) return {};
    const auto& v = obj_.at(key);
    if (v.is_null()) return {};
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    return v.dump();
  }
  std::vector<std::string> get_list(const std::string& key, char sep) const override {
    if (has(key) && obj_.at(key).is_array()) {
      std::vector<std::string> out;
      for (const auto& item : obj_.at(key))
        if (item.is_string() && !trim(item.get<std::string>()).empty()) out.push_back(trim(item.get<std::string>()));
      return out;
    }
    return FieldSource::get_list(key, sep);
  }

 private:
  const nlohmann::json& obj_;
};

struct LoadState {
  LoadResult result;
  std::unordered_set<std::string> seen_ids;
  bool warned_missing_journal_type = false;
};

void ingest_row(const FieldSource& src, const ColumnSchema& schema, std::size_t line, LoadState& state) {
  auto& result = state.result;
  ++result.rows_read;
  DocumentRecord rec;
  rec.id = trim(src.get(schema.id));
  if (rec.id.empty()) throw ValidationError(fmt::format("row {}: missing id", line));
  if (!state.seen_ids.insert(rec.id).second)
    throw ValidationError(fmt::format("row {}: duplicate id '{}'", line, rec.id));

  const auto year = parse_integer(src.get(schema.year));
  if (!year) throw ValidationError(fmt::format("row {}: unparsable year '{}'", line, src.get(schema.year)));
  rec.year = static_cast<int>(*year);

  if (src.has(schema.journal_type)) {
    const std::string label = src.get(schema.journal_type);
    auto jt = parse_journal_type(label);
    if (!jt) throw ValidationError(fmt::format("row {}: unknown journal type '{}'", line, label));
    rec.journal_type = *jt;
  } else if (!state.warned_missing_journal_type) {
    result.warnings.push_back("journal type column absent; every record assigned to Field");
    state.warned_missing_journal_type = true;
  }

  rec.title = trim(src.get(schema.title));
  rec.abstract = trim(src.get(schema.abstract));
  rec.keywords = src.get_list(schema.keywords, schema.keyword_separator);
  rec.journal = trim(src.get(schema.journal));

  if (src.has(schema.citations)) {
    const std::string raw = src.get(schema.citations);
    if (!trim(raw).empty()) {
      auto c = parse_integer(raw);
      if (!c || *c < 0) throw ValidationError(fmt::format("row {}: invalid citation count '{}'", line, raw));
      rec.citation_count = *c;
    }
  }
  if (src.has(schema.open_access)) rec.open_access = parse_flag(src.get(schema.open_access));

  std::string author = trim(src.get(schema.corresponding_author));
  if (author.empty()) author = trim(src.get(schema.authors));
  if (!author.empty()) rec.corresponding_author = author;

  if (src.has(schema.paper_type)) {
    const std::string label = trim(src.get(schema.paper_type));
    if (!label.empty()) {
      rec.paper_type = parse_paper_type(label);
      if (!rec.paper_type) result.warnings.push_back(fmt::format("row {}: unknown paper type '{}' ignored", line, label));
    }
  }

  if (rec.abstract.empty()) {
    ++result.dropped_empty_abstract;
    return;
  }
  if (rec.year < schema.min_year || rec.year > schema.max_year) {
    ++result.dropped_out_of_range_year;
    return;
  }
  result.records.push_back(std::move(rec));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(JournalType t) {
  switch (t) {
    case JournalType::Top5: return "Top5";
    case JournalType::GeneralInterest: return "GeneralInterest";
    case JournalType::Field: return "Field";
    case JournalType::IndustrialOrganization: return "IndustrialOrganization";
    case JournalType::Antitrust: return "Antitrust";
  }
  return "Field";
}

std::string_view to_string(PaperType t) {
  switch (t) {
    case PaperType::Theory: return "Theory";
    case PaperType::Empirics: return "Empirics";
    case PaperType::Experiment: return "Experiment";
    case PaperType::Policy: return "Policy";
  }
  return "Theory";
}

std::optional<JournalType> parse_journal_type(std::string_view label) {
  static const std::map<std::string, JournalType> table{
      {"top5", JournalType::Top5},
      {"t5", JournalType::Top5},
      {"top5journals", JournalType::Top5},
      {"generalinterest", JournalType::GeneralInterest},
      {"generalint", JournalType::GeneralInterest},
      {"gi", JournalType::GeneralInterest},
      {"field", JournalType::Field},
      {"f", JournalType::Field},
      {"industrialorganization", JournalType::IndustrialOrganization},
      {"industrialorganisation", JournalType::IndustrialOrganization},
      {"indorg", JournalType::IndustrialOrganization},
      {"io", JournalType::IndustrialOrganization},
      {"antitrust", JournalType::Antitrust},
      {"at", JournalType::Antitrust},
  };
  auto it = table.find(normalize_label(label));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::optional<PaperType> parse_paper_type(std::string_view label) {
  static const std::map<std::string, PaperType> table{
      {"theory", PaperType::Theory},         {"theoretical", PaperType::Theory},
      {"empirics", PaperType::Empirics},     {"empirical", PaperType::Empirics},
      {"experiment", PaperType::Experiment}, {"experimental", PaperType::Experiment},
      {"policy", PaperType::Policy},
  };
  auto it = table.find(normalize_label(label));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string fold_ascii(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      out += static_cast<char>(std::tolower(c));
      ++i;
      continue;
    }
    int len = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      ++i;  // stray continuation or invalid lead byte
      continue;
    }
    if (i + static_cast<std::size_t>(len) > text.size()) break;
    bool valid = true;
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!valid) {
      ++i;
      continue;
    }
    i += static_cast<std::size_t>(len);
    for (char f : fold_code_point(cp)) out += static_cast<char>(std::tolower(static_cast<unsigned char>(f)));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  const std::string s = fold_ascii(text);
  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (is_alpha(c)) {
      cur += c;
    } else if (c == '-' && !cur.empty() && i + 1 < s.size() && is_alpha(s[i + 1])) {
      cur += c;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool matches_operator(std::string_view text, std::string_view op) {
  return words_match(plain_words(text), split_operator(op));
}

std::vector<DocumentRecord> select_subset(const std::vector<DocumentRecord>& records,
                                          const std::vector<std::string>& operators) {
  std::vector<std::vector<std::string>> ops;
  for (const auto& op : operators) {
    auto stems = split_operator(op);
    if (!stems.empty()) ops.push_back(std::move(stems));
  }
  if (ops.empty()) throw ValidationError("select_subset: empty operator list");

  std::vector<DocumentRecord> out;
  for (const auto& rec : records) {
    std::vector<std::vector<std::string>> fields{plain_words(rec.title), plain_words(rec.abstract)};
    for (const auto& kw : rec.keywords) fields.push_back(plain_words(kw));
    const bool hit = std::any_of(ops.begin(), ops.end(), [&](const auto& stems) {
      return std::any_of(fields.begin(), fields.end(), [&](const auto& words) { return words_match(words, stems); });
    });
    if (hit) out.push_back(rec);
  }
  return out;
}

std::vector<std::string> preprocess(std::string_view text, const StopwordConfig& config) {
  std::vector<std::string> stems;
  for (auto& tok : tokenize(text)) {
    if (config.contains(tok)) continue;
    stems.push_back(porter_stem(tok));
  }
  return stems;
}

long long ProcessedCorpus::num_tokens() const {
  long long n = 0;
  for (std::size_t d = 0; d < counts.size(); ++d) n += doc_length(d);
  return n;
}

long long ProcessedCorpus::doc_length(std::size_t d) const {
  long long n = 0;
  for (const auto& e : counts[d]) n += e.count;
  return n;
}

std::vector<int> ProcessedCorpus::document_frequency() const {
  std::vector<int> df(vocabulary.size(), 0);
  for (const auto& row : counts)
    for (const auto& e : row) ++df[static_cast<std::size_t>(e.term)];
  return df;
}

ProcessedCorpus build_matrix(const std::vector<std::pair<std::string, std::vector<std::string>>>& docs) {
  ProcessedCorpus corpus;
  std::map<std::string, int> index;
  for (const auto& [id, stems] : docs)
    for (const auto& s : stems) index.emplace(s, 0);
  if (index.empty()) throw ValidationError("build_matrix: every document is empty");
  int next = 0;
  for (auto& [stem, idx] : index) {
    idx = next++;
    corpus.vocabulary.push_back(stem);
  }
  for (const auto& [id, stems] : docs) {
    if (stems.empty()) {
      corpus.dropped_ids.push_back(id);
      continue;
    }
    std::map<int, int> tf;
    for (const auto& s : stems) ++tf[index.at(s)];
    std::vector<SparseEntry> row;
    row.reserve(tf.size());
    for (const auto& [term, count] : tf) row.push_back({term, count});
    corpus.counts.push_back(std::move(row));
    corpus.doc_ids.push_back(id);
  }
  return corpus;
}

std::vector<std::vector<std::string>> parse_delimited(std::string_view content, char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  if (content.starts_with("\xEF\xBB\xBF")) i = 3;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      // swallowed; "\r\n" ends the row at '\n'
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw IoError("unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

LoadResult load_records(const std::filesystem::path& path, const ColumnSchema& schema) {
  const std::string content = read_file(path);
  const std::string ext = path.extension().string();
  LoadState state;

  if (ext == ".jsonl" || ext == ".ndjson") {
    std::istringstream in(content);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (trim(line).empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw IoError(fmt::format("{}:{}: {}", path.string(), n, e.what()));
      }
      if (!obj.is_object()) throw IoError(fmt::format("{}:{}: expected a JSON object", path.string(), n));
      ingest_row(JsonSource(obj), schema, n, state);
    }
  } else {
    const char delim = schema.delimiter != 0 ? schema.delimiter : (ext == ".tsv" ? '\t' : ',');
    const auto rows = parse_delimited(content, delim);
    if (rows.empty()) throw IoError(fmt::format("'{}' has no header row", path.string()));
    std::map<std::string, std::size_t> header;
    for (std::size_t c = 0; c < rows[0].size(); ++c) header.emplace(trim(rows[0][c]), c);
    for (const auto* required : {&schema.id, &schema.abstract, &schema.year, &schema.journal})
      if (!header.contains(*required))
        throw ValidationError(fmt::format("required column '{}' missing from '{}'", *required, path.string()));
    for (std::size_t r = 1; r < rows.size(); ++r) ingest_row(RowSource(header, rows[r]), schema, r + 1, state);
  }

  auto& result = state.result;
  if (result.dropped_empty_abstract > 0)
    result.warnings.push_back(fmt::format("dropped {} record(s) without abstract", result.dropped_empty_abstract));
  if (result.dropped_out_of_range_year > 0)
    result.warnings.push_back(fmt::format("dropped {} record(s) outside {}-{}", result.dropped_out_of_range_year,
                                          schema.min_year, schema.max_year));
  return std::move(state.result);
}

}  // namespace topictrend::corpus
