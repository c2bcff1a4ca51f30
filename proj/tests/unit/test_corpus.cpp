#include <gtest/gtest.h>

#include <map>
#include <random>

#include "generators.hpp"
#include "topictrend/corpus.hpp"
#include "topictrend/error.hpp"
#include "topictrend/table.hpp"

using namespace topictrend;
using namespace topictrend::corpus;

namespace {

std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name, const std::string& body) {
  const auto p = dir / name;
  write_text_file(p, body);
  return p;
}

DocumentRecord record_with(std::string abstract) {
  DocumentRecord r;
  r.id = "x";
  r.abstract = std::move(abstract);
  r.year = 2010;
  return r;
}

}  // namespace

TEST(PorterStemmer, ClassicVocabulary) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"caresses", "caress"},     {"ponies", "poni"},          {"ties", "ti"},
      {"caress", "caress"},       {"cats", "cat"},             {"feed", "feed"},
      {"agreed", "agre"},         {"plastered", "plaster"},    {"bled", "bled"},
      {"motoring", "motor"},      {"sing", "sing"},            {"conflated", "conflat"},
      {"troubled", "troubl"},     {"sized", "size"},           {"hopping", "hop"},
      {"tanned", "tan"},          {"falling", "fall"},         {"hissing", "hiss"},
      {"fizzed", "fizz"},         {"failing", "fail"},         {"filing", "file"},
      {"happy", "happi"},         {"sky", "sky"},              {"relational", "relat"},
      {"conditional", "condit"},  {"rational", "ration"},      {"valenci", "valenc"},
      {"hesitanci", "hesit"},     {"digitizer", "digit"},      {"conformabli", "conform"},
      {"radicalli", "radic"},     {"differentli", "differ"},   {"vileli", "vile"},
      {"analogousli", "analog"},  {"vietnamization", "vietnam"}, {"predication", "predic"},
      {"operator", "oper"},       {"feudalism", "feudal"},     {"decisiveness", "decis"},
      {"hopefulness", "hope"},    {"callousness", "callous"},  {"formaliti", "formal"},
      {"sensitiviti", "sensit"},  {"sensibiliti", "sensibl"},  {"triplicate", "triplic"},
      {"formative", "form"},      {"formalize", "formal"},     {"electriciti", "electr"},
      {"electrical", "electr"},   {"hopeful", "hope"},         {"goodness", "good"},
      {"revival", "reviv"},       {"allowance", "allow"},      {"inference", "infer"},
      {"airliner", "airlin"},     {"gyroscopic", "gyroscop"},  {"adjustable", "adjust"},
      {"defensible", "defens"},   {"irritant", "irrit"},       {"replacement", "replac"},
      {"adjustment", "adjust"},   {"dependent", "depend"},     {"adoption", "adopt"},
      {"homologou", "homolog"},   {"communism", "commun"},     {"activate", "activ"},
      {"angulariti", "angular"},  {"homologous", "homolog"},   {"effective", "effect"},
      {"bowdlerize", "bowdler"},  {"probate", "probat"},       {"rate", "rate"},
      {"cease", "ceas"},          {"controll", "control"},     {"roll", "roll"},
      {"generalizations", "gener"}, {"oscillators", "oscil"},  {"cooperation", "cooper"},
      {"collude", "collud"},      {"a", "a"},                  {"is", "is"},
  };
  for (const auto& [in, out] : cases) EXPECT_EQ(porter_stem(in), out) << in;
}

TEST(Preprocess, CooperationAmongFirms) {
  EXPECT_EQ(preprocess("Cooperation among firms.", default_stopwords()), (std::vector<std::string>{"cooper", "firm"}));
}

TEST(Preprocess, OnlyStopwords) { EXPECT_TRUE(preprocess("The and of", default_stopwords()).empty()); }

TEST(Preprocess, OperatorWordsAreStopwords) {
  EXPECT_EQ(preprocess("Cartels collude", default_stopwords()), (std::vector<std::string>{"collud"}));
}

// The distributed file has 571 lines; "would" appears twice.
TEST(Preprocess, SmartListSize) { EXPECT_EQ(smart_stoplist().size(), 570u); }

TEST(Tokenize, HyphensAndDiacritics) {
  EXPECT_EQ(tokenize("Price-fixing, -- cartel-  Müller's 2nd café"),
            (std::vector<std::string>{"price-fixing", "cartel", "muller", "s", "nd", "cafe"}));
  EXPECT_EQ(fold_ascii("ÉCOLE Ñandú"), "ecole nandu");
}

TEST(SelectSubset, OperatorMatching) {
  EXPECT_TRUE(matches_operator("the bidding ring organized", "bidding ring"));
  EXPECT_TRUE(matches_operator("Bidding rings were common", "bidding ring"));
  EXPECT_TRUE(matches_operator("international cartels raised prices", "cartel"));
  EXPECT_FALSE(matches_operator("cartography of markets", "cartel"));
  EXPECT_FALSE(matches_operator("a ring of bidding", "bidding ring"));

  std::vector<DocumentRecord> recs{record_with("cartography of markets"), record_with("international cartels raised prices")};
  recs[1].id = "y";
  const auto sel = select_subset(recs, {"cartel"});
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0].id, "y");
}

TEST(SelectSubset, MatchesTitleAndKeywords) {
  auto r = record_with("nothing here");
  r.title = "Leniency and Collusion";
  EXPECT_EQ(select_subset({r}, {"collusion"}).size(), 1u);
  r.title.clear();
  r.keywords = {"bid rigging"};
  EXPECT_EQ(select_subset({r}, {"bid rigging"}).size(), 1u);
}

TEST(BuildMatrix, SingleDocument) {
  const auto c = build_matrix({{"a", {"x", "x", "y"}}});
  EXPECT_EQ(c.num_terms(), 2u);
  EXPECT_EQ(c.num_tokens(), 3);
  ASSERT_EQ(c.counts[0].size(), 2u);
  EXPECT_EQ(c.vocabulary[static_cast<std::size_t>(c.counts[0][0].term)], "x");
  EXPECT_EQ(c.counts[0][0].count, 2);
  EXPECT_EQ(c.counts[0][1].count, 1);
}

TEST(BuildMatrix, EmptyDocumentDropped) {
  const auto c = build_matrix({{"a", {"x"}}, {"b", {}}});
  EXPECT_EQ(c.num_docs(), 1u);
  EXPECT_EQ(c.dropped_ids, (std::vector<std::string>{"b"}));
  EXPECT_THROW(build_matrix({{"a", {}}}), ValidationError);
}

TEST(BuildMatrix, TotalsMatchNaiveRecount) {
  testsupport::Rng rng(7);
  std::uniform_int_distribution<int> len(0, 30), word(0, 80);
  std::vector<std::pair<std::string, std::vector<std::string>>> docs;
  for (int d = 0; d < 200; ++d) {
    std::vector<std::string> w;
    for (int i = len(rng); i > 0; --i) w.push_back("w" + std::to_string(word(rng)));
    docs.emplace_back("d" + std::to_string(d), w);
  }
  const auto c = build_matrix(docs);

  long long total = 0;
  std::map<std::string, long long> per_word;
  std::size_t nonempty = 0;
  for (const auto& [id, w] : docs) {
    total += static_cast<long long>(w.size());
    nonempty += !w.empty();
    for (const auto& s : w) ++per_word[s];
  }
  EXPECT_EQ(c.num_tokens(), total);
  EXPECT_EQ(c.num_docs(), nonempty);
  ASSERT_EQ(c.num_terms(), per_word.size());
  std::vector<long long> from_matrix(c.num_terms(), 0);
  for (const auto& row : c.counts) {
    EXPECT_FALSE(row.empty());
    for (const auto& e : row) from_matrix[static_cast<std::size_t>(e.term)] += e.count;
  }
  for (std::size_t v = 0; v < c.num_terms(); ++v) EXPECT_EQ(from_matrix[v], per_word.at(c.vocabulary[v]));
}

TEST(LoadRecords, FieldsDropsAndDuplicates) {
  const auto dir = testsupport::scratch_dir("load");
  const auto csv = write_file(dir, "r.csv",
                              "id,title,abstract,keywords,year,journal,journal_type,citations,open_access,"
                              "corresponding_author\n"
                              "A1,\"A title, with comma\",Cartels raise prices.,cartel;price,2004,J Ind Econ,IO,12,1,Smith\n"
                              "A2,No abstract,,x,2005,J,GI,0,0,Jones\n"
                              "A3,Old,Some text,x,1999,J,GI,0,0,Jones\n");
  const auto r = load_records(csv);
  EXPECT_EQ(r.rows_read, 3u);
  EXPECT_EQ(r.dropped_empty_abstract, 1u);
  EXPECT_EQ(r.dropped_out_of_range_year, 1u);
  ASSERT_EQ(r.records.size(), 1u);
  const auto& a = r.records[0];
  EXPECT_EQ(a.id, "A1");
  EXPECT_EQ(a.title, "A title, with comma");
  EXPECT_EQ(a.keywords, (std::vector<std::string>{"cartel", "price"}));
  EXPECT_EQ(a.year, 2004);
  EXPECT_EQ(a.journal_type, JournalType::IndustrialOrganization);
  EXPECT_EQ(a.citation_count, 12);
  EXPECT_TRUE(a.open_access);
  EXPECT_EQ(a.corresponding_author.value_or(""), "Smith");

  const auto dup = write_file(dir, "d.csv", "id,abstract,year\nX1,a,2001\nX1,b,2002\n");
  EXPECT_THROW(load_records(dup), ValidationError);
  const auto bad_type = write_file(dir, "t.csv", "id,abstract,year,journal_type\nX1,a,2001,Nonsense\n");
  EXPECT_THROW(load_records(bad_type), ValidationError);
  EXPECT_THROW(load_records(dir / "missing.csv"), IoError);
}

TEST(LoadRecords, JsonLines) {
  const auto dir = testsupport::scratch_dir("jsonl");
  const auto p = write_file(dir, "r.jsonl",
                            "{\"id\":\"J1\",\"abstract\":\"collusion\",\"year\":2010,\"citations\":3,"
                            "\"keywords\":[\"a\",\"b\"],\"open_access\":true}\n");
  const auto r = load_records(p);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].citation_count, 3);
  EXPECT_EQ(r.records[0].keywords.size(), 2u);
  EXPECT_TRUE(r.records[0].open_access);
}

TEST(Archive, CorpusAndRecordsRoundTrip) {
  const auto dir = testsupport::scratch_dir("archive");
  const auto c = build_matrix({{"a", {"x", "y", "y"}}, {"b", {"z"}}, {"c", {}}});
  write_corpus_archive(c, dir / "corpus");
  const auto back = read_corpus_archive(dir / "corpus");
  EXPECT_EQ(back.vocabulary, c.vocabulary);
  EXPECT_EQ(back.doc_ids, c.doc_ids);
  EXPECT_EQ(back.dropped_ids, c.dropped_ids);
  EXPECT_EQ(back.num_tokens(), c.num_tokens());

  DocumentRecord r = record_with("abc");
  r.title = "tab\tinside";
  r.corresponding_author = "Doe";
  r.citation_count = 5;
  r.journal = "Econometrica";
  r.journal_type = JournalType::Top5;
  write_records_table({r}, dir / "records.tsv");
  const auto rs = read_records_table(dir / "records.tsv");
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0].id, "x");
  EXPECT_EQ(rs[0].citation_count, 5);
  EXPECT_EQ(rs[0].journal_type, JournalType::Top5);
  EXPECT_EQ(rs[0].corresponding_author.value_or(""), "Doe");
}
