#include <benchmark/benchmark.h>

#include <vector>

#include "hraml/dataset.hpp"
#include "hraml/evaluators.hpp"
#include "hraml/linear_raml.hpp"
#include "hraml/network.hpp"
#include "hraml/random.hpp"
#include "hraml/trainer.hpp"

namespace {

using namespace hraml;

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  }
  return m;
}

Eigen::MatrixXd binary_labels(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd y(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) y(r, c) = rng.uniform01() < 0.3 ? 1.0 : 0.0;
  }
  return y;
}

// Forward both samples and backpropagate one pair; argument is the hidden width.
void BM_PairForwardBackward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const std::vector<std::size_t> sizes{72, width, width, 20};
  const auto model = init_model(sizes, 1);
  Rng rng(2);
  const Eigen::VectorXd xi = normal_matrix(72, 1, rng);
  const Eigen::VectorXd xj = normal_matrix(72, 1, rng);
  for (auto _ : state) {
    const auto ti = forward(model, xi);
    const auto tj = forward(model, xj);
    benchmark::DoNotOptimize(pair_backward(model, ti, tj, 1.0, 1e-4));
  }
}
BENCHMARK(BM_PairForwardBackward)->Arg(16)->Arg(64)->Arg(256);

// 100 SGD steps over batches of 16 pairs; argument is the thread count.
void BM_TrainStep(benchmark::State& state) {
  Rng rng(3);
  const auto ds = Dataset::create(normal_matrix(400, 72, rng), binary_labels(400, 6, rng), TaskKind::MultiLabel);
  const auto sp = split(ds, 0.3, 0);
  TrainConfig cfg;
  cfg.layer_sizes = {72, 64, 20};
  cfg.batch_size = 16;
  cfg.max_iterations = 100;
  cfg.threads = static_cast<std::size_t>(state.range(0));
  const auto pairs = training_pairs(ds, sp, cfg);
  const auto model = init_model(cfg.layer_sizes, 0);
  for (auto _ : state) benchmark::DoNotOptimize(train_on_pairs(ds.features(), pairs, model, cfg));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

// Exact 10-NN query against n references of dimension 20.
void BM_KnnQuery(benchmark::State& state) {
  Rng rng(4);
  const auto n = state.range(0);
  const NeighborIndex index(normal_matrix(n, 20, rng), binary_labels(n, 6, rng));
  const Eigen::VectorXd query = normal_matrix(20, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(index.nearest(query, 10));
}
BENCHMARK(BM_KnnQuery)->Arg(500)->Arg(5000);

// MLkNN fit with leave-one-out neighborhoods over n samples.
void BM_MlknnFit(benchmark::State& state) {
  Rng rng(5);
  const auto n = state.range(0);
  const Eigen::MatrixXd x = normal_matrix(n, 20, rng);
  const Eigen::MatrixXd y = binary_labels(n, 6, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mlknn_fit(x, y, 10, 1.0));
}
BENCHMARK(BM_MlknnFit)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

// Linear metric fit over all pairs of 200 samples; argument is the dimension.
void BM_LinearFit(benchmark::State& state) {
  Rng rng(6);
  const auto d = state.range(0);
  const Eigen::MatrixXd x = normal_matrix(200, d, rng);
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < 200; ++i) {
    for (std::size_t j = i + 1; j < 200; ++j) pairs.push_back({i, j, rng.uniform(0.0, 2.0)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_linear_pairs(x, pairs, 1e-3, true));
}
BENCHMARK(BM_LinearFit)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
