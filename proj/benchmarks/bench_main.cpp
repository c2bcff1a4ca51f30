#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "topictrend/embeddings.hpp"
#include "topictrend/multivar.hpp"
#include "topictrend/topic_model.hpp"
#include "topictrend/trend_series.hpp"

using namespace topictrend;

static void BM_TopicFit(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const auto c = testsupport::disjoint_topic_corpus(1, K, 400, 50, 30);
  topics::FitOptions o;
  o.max_iterations = 10;
  o.tolerance = 0.0;
  for (auto _ : state) {
    auto f = topics::fit(c.corpus, topics::intercept_only_design(400), K, o);
    benchmark::DoNotOptimize(f.beta.data());
  }
  state.SetItemsProcessed(state.iterations() * o.max_iterations);
}
BENCHMARK(BM_TopicFit)->Arg(2)->Arg(6)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_VarFit(benchmark::State& state) {
  testsupport::Rng rng(2);
  const int k = static_cast<int>(state.range(0));
  const auto A = testsupport::random_stable_var(rng, k, 2);
  const auto y = testsupport::simulate_var(rng, A, 500, Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Identity(k, k));
  const auto s = multivar::make_series(y);
  for (auto _ : state) {
    auto m = multivar::fit_var(s, 2);
    benchmark::DoNotOptimize(m.sigma_u.data());
  }
}
BENCHMARK(BM_VarFit)->Arg(2)->Arg(5)->Arg(10);

static void BM_VarBootstrapIrf(benchmark::State& state) {
  testsupport::Rng rng(3);
  const auto A = testsupport::random_stable_var(rng, 4, 2);
  const auto y = testsupport::simulate_var(rng, A, 200, Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4));
  const auto m = multivar::fit_var(multivar::make_series(y), 2);
  for (auto _ : state) {
    auto ir = multivar::impulse_response(m, 10, true, multivar::Bootstrap{100, 0.95, 1});
    benchmark::DoNotOptimize(ir.response.data());
  }
}
BENCHMARK(BM_VarBootstrapIrf)->Unit(benchmark::kMillisecond);

static void BM_UnitRootBattery(benchmark::State& state) {
  testsupport::Rng rng(4);
  const auto y = testsupport::random_walk(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto b = trend::unit_root_battery(y, 2, trend::newey_west_lag(static_cast<int>(y.size())));
    benchmark::DoNotOptimize(b.data());
  }
}
BENCHMARK(BM_UnitRootBattery)->Arg(22)->Arg(200)->Arg(2000);

static void BM_PvDbowEpoch(benchmark::State& state) {
  const auto c = testsupport::disjoint_topic_corpus(5, 4, 800, 60, 40);
  embed::TrainOptions o;
  o.dim = 50;
  o.iterations = 1;
  for (auto _ : state) {
    auto m = embed::train_pvdbow(c.corpus, o);
    benchmark::DoNotOptimize(m.doc_vectors.data());
  }
}
BENCHMARK(BM_PvDbowEpoch)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
