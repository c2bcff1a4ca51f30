#include "topictrend/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "detail/json_eigen.hpp"
#include "topictrend/error.hpp"
#include "topictrend/random.hpp"
#include "topictrend/table.hpp"

namespace topictrend::embed {

namespace {

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

EmbeddingModel train_pvdbow(const corpus::ProcessedCorpus& corpus, const TrainOptions& opts) {
  if (opts.dim < 1 || opts.iterations < 1 || opts.negative < 1)
    throw ValidationError("embedding: dim, iterations and negative must be positive");
  if (!(opts.alpha_start > 0.0) || opts.alpha_end < 0.0 || opts.alpha_end > opts.alpha_start)
    throw ValidationError("embedding: need alpha_start > 0 and 0 <= alpha_end <= alpha_start");
  const auto D = static_cast<Eigen::Index>(corpus.num_docs());
  const auto V = static_cast<Eigen::Index>(corpus.num_terms());
  if (D == 0 || V == 0) throw ValidationError("embedding: empty corpus");
  if (D < 2) throw ValidationError("embedding: need at least two documents");
  if (opts.dim < 2 || opts.dim > V)
    throw ValidationError(fmt::format("embedding: dim {} outside [2, V = {}]", opts.dim, V));

  std::vector<double> cumulative(static_cast<std::size_t>(V), 0.0);
  {
    std::vector<double> freq(static_cast<std::size_t>(V), 0.0);
    for (const auto& row : corpus.counts)
      for (const auto& e : row) freq[static_cast<std::size_t>(e.term)] += e.count;
    double acc = 0.0;
    for (std::size_t v = 0; v < freq.size(); ++v) {
      acc += std::pow(freq[v], opts.sampling_power);
      cumulative[v] = acc;
    }
    for (auto& c : cumulative) c /= acc;
  }

  std::vector<std::vector<int>> tokens(static_cast<std::size_t>(D));
  long long total = 0;
  for (Eigen::Index d = 0; d < D; ++d) {
    for (const auto& e : corpus.counts[static_cast<std::size_t>(d)])
      tokens[static_cast<std::size_t>(d)].insert(tokens[static_cast<std::size_t>(d)].end(), e.count, e.term);
    total += static_cast<long long>(tokens[static_cast<std::size_t>(d)].size());
  }

  EmbeddingModel m;
  m.dim = opts.dim;
  m.iterations = opts.iterations;
  m.seed = opts.seed;
  m.doc_ids = corpus.doc_ids;
  auto engine = make_engine(opts.seed, "embedding");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  m.doc_vectors.resize(D, opts.dim);
  for (Eigen::Index d = 0; d < D; ++d)
    for (int j = 0; j < opts.dim; ++j) m.doc_vectors(d, j) = (unif(engine) - 0.5) / opts.dim;
  m.word_output = MatrixXd::Zero(V, opts.dim);

  auto draw = [&]() {
    const double u = unif(engine);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(), V - 1));
  };

  const double steps = static_cast<double>(total) * opts.iterations;
  long long done = 0;
  Eigen::RowVectorXd grad(opts.dim);
  for (int epoch = 0; epoch < opts.iterations; ++epoch) {
    double loss = 0.0;
    for (Eigen::Index d = 0; d < D; ++d) {
      auto doc = m.doc_vectors.row(d);
      for (int w : tokens[static_cast<std::size_t>(d)]) {
        const double alpha = opts.alpha_start - (opts.alpha_start - opts.alpha_end) * (done / steps);
        ++done;
        grad.setZero();
        for (int s = 0; s <= opts.negative; ++s) {
          int target = w;
          double label = 1.0;
          if (s > 0) {
            target = draw();
            if (target == w) continue;
            label = 0.0;
          }
          auto out = m.word_output.row(target);
          const double score = doc.dot(out);
          loss -= label > 0.0 ? log_sigmoid(score) : log_sigmoid(-score);
          const double g = (label - 1.0 / (1.0 + std::exp(-score))) * alpha;
          grad += g * out;
          out += g * doc;
        }
        doc += grad;
      }
    }
    m.epoch_loss.push_back(loss / static_cast<double>(std::max<long long>(total, 1)));
    if (!std::isfinite(m.epoch_loss.back())) throw NumericalError(fmt::format("embedding: non-finite loss at epoch {}", epoch + 1));
  }
  return m;
}

SimilaritySeries similarity_series(const MatrixXd& doc_vectors, std::span<const int> years, bool normalize) {
  if (static_cast<Eigen::Index>(years.size()) != doc_vectors.rows())
    throw ValidationError("similarity: one year per document required");
  MatrixXd v = doc_vectors;
  if (normalize) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double n = v.row(i).norm();
      if (n > 0.0) v.row(i) /= n;
    }
  }
  std::map<int, std::vector<Eigen::Index>> by_year;
  for (std::size_t i = 0; i < years.size(); ++i) by_year[years[i]].push_back(static_cast<Eigen::Index>(i));
  SimilaritySeries s;
  s.normalized = normalize;
  for (const auto& [year, docs] : by_year) {
    if (docs.size() < 2) {
      s.omitted_years.push_back(year);
      continue;
    }
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(v.cols());
    double self = 0.0;
    for (auto i : docs) {
      sum += v.row(i);
      self += v.row(i).squaredNorm();
    }
    const double n = static_cast<double>(docs.size());
    s.points.push_back({year, (sum.squaredNorm() - self) / (n * (n - 1.0)), static_cast<int>(docs.size())});
  }
  if (s.points.empty()) throw ValidationError("similarity: no year has two or more documents");
  return s;
}

void write_model_archive(const EmbeddingModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["dim"] = model.dim;
  j["iterations"] = model.iterations;
  j["seed"] = model.seed;
  j["epoch_loss"] = model.epoch_loss;
  j["doc_ids"] = model.doc_ids;
  j["doc_vectors"] = detail::matrix_to_json(model.doc_vectors);
  j["word_output"] = detail::matrix_to_json(model.word_output);
  write_text_file(path, j.dump() + '\n');
}

EmbeddingModel read_model_archive(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_text_file(path));
  if (j.value("format_version", 0) != 1) throw IoError(fmt::format("'{}': unsupported embedding archive", path.string()));
  EmbeddingModel m;
  m.dim = j.at("dim").get<int>();
  m.iterations = j.at("iterations").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
  m.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  m.doc_vectors = detail::matrix_from_json(j.at("doc_vectors"), m.dim);
  m.word_output = detail::matrix_from_json(j.at("word_output"), m.dim);
  return m;
}

}  // namespace topictrend::embed
