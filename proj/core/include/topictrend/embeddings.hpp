#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "topictrend/corpus.hpp"

namespace topictrend::embed {

using Eigen::MatrixXd;

struct TrainOptions {
  int dim = 50;
  int iterations = 20;
  int negative = 5;
  double alpha_start = 0.025;
  double alpha_end = 0.0001;
  double sampling_power = 0.75;
  std::uint64_t seed = 1;
};

struct EmbeddingModel {
  int dim = 0;
  int iterations = 0;
  MatrixXd doc_vectors;   // D x dim
  MatrixXd word_output;   // V x dim, negative-sampling output weights
  std::vector<double> epoch_loss;
  std::uint64_t seed = 0;
  std::vector<std::string> doc_ids;
};

/// Paragraph vectors, distributed bag of words, negative sampling.
/// Single-threaded and deterministic for a fixed seed.
EmbeddingModel train_pvdbow(const corpus::ProcessedCorpus& corpus, const TrainOptions& opts = {});

struct YearValue {
  int year = 0;
  double value = 0.0;
  int docs = 0;
};

struct SimilaritySeries {
  std::vector<YearValue> points;
  std::vector<int> omitted_years;  // fewer than two documents
  bool normalized = true;
};

/// Per year: each document's mean inner product with the other documents of
/// that year, averaged over documents. Vectors are unit-normalized unless
/// `normalize` is false.
SimilaritySeries similarity_series(const MatrixXd& doc_vectors, std::span<const int> years,
                                   bool normalize = true);

void write_model_archive(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel read_model_archive(const std::filesystem::path& path);

}  // namespace topictrend::embed
