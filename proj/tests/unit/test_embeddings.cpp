#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "topictrend/embeddings.hpp"
#include "topictrend/error.hpp"

using namespace topictrend;
using namespace topictrend::embed;
using Eigen::MatrixXd;

namespace {

corpus::ProcessedCorpus duplicate_corpus() {
  std::vector<std::string> shared, other;
  for (int i = 0; i < 60; ++i) {
    shared.push_back("s" + std::to_string(i % 12));
    other.push_back("o" + std::to_string(i % 12));
  }
  return corpus::build_matrix({{"a", shared}, {"b", shared}, {"c", other}});
}

double cosine(const MatrixXd& v, int i, int j) { return v.row(i).dot(v.row(j)) / (v.row(i).norm() * v.row(j).norm()); }

double naive_year_value(const MatrixXd& v, const std::vector<int>& idx) {
  double total = 0.0;
  for (int i : idx) {
    double s = 0.0;
    for (int j : idx)
      if (j != i) s += v.row(i).dot(v.row(j));
    total += s / (idx.size() - 1.0);
  }
  return total / idx.size();
}

}  // namespace

TEST(PvDbow, DimensionHonored) {
  auto c = testsupport::disjoint_topic_corpus(1, 2, 30, 40, 30);
  TrainOptions o;
  o.dim = 50;
  o.iterations = 2;
  const auto m = train_pvdbow(c.corpus, o);
  EXPECT_EQ(m.doc_vectors.cols(), 50);
  EXPECT_EQ(m.doc_vectors.rows(), 30);
  EXPECT_EQ(m.epoch_loss.size(), 2u);
}

TEST(PvDbow, DuplicatesCloserThanDisjoint) {
  const auto c = duplicate_corpus();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainOptions o;
    o.dim = 10;
    o.iterations = 30;
    o.seed = seed;
    const auto m = train_pvdbow(c, o);
    const double same = cosine(m.doc_vectors, 0, 1);
    EXPECT_GT(same, cosine(m.doc_vectors, 0, 2)) << "seed " << seed;
    EXPECT_GT(same, cosine(m.doc_vectors, 1, 2)) << "seed " << seed;
  }
}

TEST(PvDbow, DeterministicAndLossFalls) {
  auto c = testsupport::disjoint_topic_corpus(2, 2, 40, 40, 30);
  TrainOptions o;
  o.dim = 8;
  o.iterations = 10;
  o.seed = 4;
  const auto a = train_pvdbow(c.corpus, o), b = train_pvdbow(c.corpus, o);
  EXPECT_TRUE(a.doc_vectors == b.doc_vectors);
  EXPECT_LT(a.epoch_loss.back(), a.epoch_loss.front());
}

TEST(PvDbow, InvalidOptions) {
  const auto c = duplicate_corpus();
  TrainOptions o;
  o.dim = 1000;
  EXPECT_THROW(train_pvdbow(c, o), ValidationError);
  o.dim = 0;
  EXPECT_THROW(train_pvdbow(c, o), ValidationError);
}

TEST(Similarity, DuplicatesScoreOne) {
  MatrixXd v(3, 4);
  v << 1, 2, 3, 4, 2, 4, 6, 8, 1, 0, 0, 0;
  const std::vector<int> years{2000, 2000, 2001};
  const auto s = similarity_series(v, years);
  ASSERT_EQ(s.points.size(), 1u);
  EXPECT_NEAR(s.points[0].value, 1.0, 1e-12);
  EXPECT_EQ(s.omitted_years, (std::vector<int>{2001}));
}

TEST(Similarity, OrthogonalScoresZero) {
  std::mt19937_64 rng(3);
  const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(MatrixXd::Random(6, 6)).householderQ();
  const std::vector<int> years(6, 2010);
  EXPECT_NEAR(similarity_series(q, years).points[0].value, 0.0, 1e-9);
}

TEST(Similarity, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  MatrixXd v(30, 7);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 7; ++j) v(i, j) = n(rng);
  std::vector<int> years;
  for (int i = 0; i < 30; ++i) years.push_back(2000 + i % 3);
  for (bool normalize : {true, false}) {
    MatrixXd w = v;
    if (normalize) w.rowwise().normalize();
    const auto s = similarity_series(v, years, normalize);
    ASSERT_EQ(s.points.size(), 3u);
    for (int y = 0; y < 3; ++y) {
      std::vector<int> idx;
      for (int i = 0; i < 30; ++i)
        if (years[static_cast<std::size_t>(i)] == 2000 + y) idx.push_back(i);
      EXPECT_NEAR(s.points[static_cast<std::size_t>(y)].value, naive_year_value(w, idx), 1e-12);
    }
  }
}

TEST(Similarity, SelfSimilarityOfUnitVector) {
  MatrixXd v(2, 3);
  v << 3, 4, 12, 3, 4, 12;
  const std::vector<int> years{2000, 2000};
  EXPECT_NEAR(similarity_series(v, years).points[0].value, 1.0, 1e-9);
}

TEST(Archive, ModelRoundTrip) {
  const auto c = duplicate_corpus();
  TrainOptions o;
  o.dim = 4;
  o.iterations = 2;
  const auto m = train_pvdbow(c, o);
  const auto dir = testsupport::scratch_dir("embed");
  write_model_archive(m, dir / "m.json");
  const auto back = read_model_archive(dir / "m.json");
  EXPECT_TRUE(back.doc_vectors == m.doc_vectors);
  EXPECT_EQ(back.doc_ids, m.doc_ids);
}
