#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "topictrend/corpus.hpp"
#include "topictrend/error.hpp"
#include "topictrend/table.hpp"

namespace topictrend::corpus {

namespace {

constexpr int kArchiveVersion = 1;

}  // namespace

std::set<std::string> read_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read word list '{}'", path.string()));
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string folded = fold_ascii(line);
    auto b = folded.find_first_not_of(" \t\r");
    if (b == std::string::npos || folded[b] == '#') continue;
    auto e = folded.find_last_not_of(" \t\r");
    words.insert(folded.substr(b, e - b + 1));
  }
  return words;
}

void write_corpus_archive(const ProcessedCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string vocab;
  for (const auto& v : corpus.vocabulary) vocab += v + '\n';
  write_text_file(dir / "vocabulary.txt", vocab);

  std::string ids;
  for (const auto& id : corpus.doc_ids) ids += id + '\n';
  write_text_file(dir / "documents.txt", ids);

  std::string triplets = "doc\tterm\tcount\n";
  for (std::size_t d = 0; d < corpus.counts.size(); ++d)
    for (const auto& e : corpus.counts[d]) triplets += fmt::format("{}\t{}\t{}\n", d, e.term, e.count);
  write_text_file(dir / "counts.tsv", triplets);

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kArchiveVersion;
  manifest["documents"] = corpus.num_docs();
  manifest["terms"] = corpus.num_terms();
  manifest["tokens"] = corpus.num_tokens();
  manifest["dropped_empty_documents"] = corpus.dropped_ids;
  write_text_file(dir / "manifest.json", manifest.dump(2) + '\n');
}

ProcessedCorpus read_corpus_archive(const std::filesystem::path& dir) {
  ProcessedCorpus corpus;
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  if (manifest.value("format_version", 0) != kArchiveVersion)
    throw IoError(fmt::format("unsupported corpus archive version in '{}'", dir.string()));

  auto read_lines = [](const std::filesystem::path& p) {
    std::vector<std::string> lines;
    std::istringstream in(read_text_file(p));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) lines.push_back(line);
    return lines;
  };
  corpus.vocabulary = read_lines(dir / "vocabulary.txt");
  corpus.doc_ids = read_lines(dir / "documents.txt");
  corpus.counts.resize(corpus.doc_ids.size());
  const Table triplets = Table::read(dir / "counts.tsv");
  for (const auto& row : triplets.rows) {
    if (row.size() != 3) throw IoError("corpus archive: malformed triplet row");
    const auto d = std::stoul(row[0]);
    const int t = std::stoi(row[1]);
    const int c = std::stoi(row[2]);
    if (d >= corpus.counts.size() || t < 0 || static_cast<std::size_t>(t) >= corpus.vocabulary.size() || c <= 0)
      throw IoError("corpus archive: triplet out of range");
    corpus.counts[d].push_back({t, c});
  }
  corpus.dropped_ids = manifest.value("dropped_empty_documents", std::vector<std::string>{});
  if (corpus.num_tokens() != manifest.value("tokens", -1LL))
    throw IoError("corpus archive: token total disagrees with manifest");
  return corpus;
}

void write_records_table(const std::vector<DocumentRecord>& records, const std::filesystem::path& path) {
  Table t;
  t.header = {"id", "year", "journal", "journal_type", "citations", "open_access",
              "corresponding_author", "paper_type", "title"};
  for (const auto& r : records) {
    t.add_row({r.id, std::to_string(r.year), r.journal, std::string(to_string(r.journal_type)),
               std::to_string(r.citation_count), r.open_access ? "1" : "0", r.corresponding_author.value_or(""),
               r.paper_type ? std::string(to_string(*r.paper_type)) : std::string{}, r.title});
  }
  t.write(path);
}

std::vector<DocumentRecord> read_records_table(const std::filesystem::path& path) {
  const Table t = Table::read(path);
  const auto c_id = t.column("id"), c_year = t.column("year"), c_journal = t.column("journal"),
             c_type = t.column("journal_type"), c_cit = t.column("citations"), c_oa = t.column("open_access"),
             c_author = t.column("corresponding_author"), c_paper = t.column("paper_type"),
             c_title = t.column("title");
  std::vector<DocumentRecord> records;
  for (const auto& row : t.rows) {
    if (row.size() < t.header.size()) throw IoError(fmt::format("'{}': short row", path.string()));
    DocumentRecord r;
    r.id = row[c_id];
    r.year = std::stoi(row[c_year]);
    r.journal = row[c_journal];
    auto jt = parse_journal_type(row[c_type]);
    if (!jt) throw IoError(fmt::format("'{}': unknown journal type '{}'", path.string(), row[c_type]));
    r.journal_type = *jt;
    r.citation_count = std::stoll(row[c_cit]);
    r.open_access = row[c_oa] == "1";
    if (!row[c_author].empty()) r.corresponding_author = row[c_author];
    if (!row[c_paper].empty()) r.paper_type = parse_paper_type(row[c_paper]);
    r.title = row[c_title];
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace topictrend::corpus
