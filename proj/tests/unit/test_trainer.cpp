#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "hraml/error.hpp"
#include "hraml/evaluators.hpp"
#include "hraml/trainer.hpp"
#include "invariants.hpp"
#include "oracles.hpp"

namespace hraml {
namespace {

Split all_train(std::size_t n) {
  Split s;
  for (std::size_t i = 0; i < n; ++i) s.train.push_back(i);
  return s;
}

/// Every row but the last trains; the last is held out.
Split holdout_last(std::size_t n) {
  Split s = all_train(n - 1);
  s.test = {n - 1};
  return s;
}

Dataset one_hot_dataset(std::size_t n, std::size_t classes, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x = fixtures::random_matrix(n, d, rng);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(classes));
  for (Eigen::Index r = 0; r < y.rows(); ++r) y(r, r % static_cast<Eigen::Index>(classes)) = 1.0;
  return Dataset::create(x, y, TaskKind::SingleLabel);
}

TrainConfig small_config(std::size_t d) {
  TrainConfig cfg;
  cfg.layer_sizes = {d, 4, 3};
  cfg.max_iterations = 200;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  return cfg;
}

bool same_model(const MlpModel& a, const MlpModel& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t m = 0; m < a.layers.size(); ++m) {
    if (a.layers[m].weight != b.layers[m].weight || a.layers[m].bias != b.layers[m].bias) return false;
  }
  return true;
}

TEST(Pairs, AllEnumeratesUnorderedPairs) {
  const auto ds = one_hot_dataset(6, 2, 2, 1);
  Split s;
  s.train = {0, 2, 3, 5};
  s.test = {1, 4};
  const auto batch = generate_pairs(ds, s, RelationKind::L1Label, {}, PairBudget::all(), 0);
  ASSERT_EQ(batch.size(), 6u);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : batch.pairs) {
    EXPECT_LT(p.first, p.second);
    EXPECT_TRUE(std::count(s.train.begin(), s.train.end(), p.first));
    EXPECT_TRUE(std::count(s.train.begin(), s.train.end(), p.second));
    EXPECT_EQ(p.target, ds.class_ids()[p.first] == ds.class_ids()[p.second] ? 0.0 : 2.0);
    seen.insert({p.first, p.second});
  }
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Pairs, CountIsReproducibleAndDistinct) {
  const auto ds = one_hot_dataset(20, 3, 2, 2);
  const auto a = generate_pairs(ds, all_train(20), RelationKind::L1Label, {}, PairBudget::exactly(3), 9);
  const auto b = generate_pairs(ds, all_train(20), RelationKind::L1Label, {}, PairBudget::exactly(3), 9);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.pairs[k].first, b.pairs[k].first);
    EXPECT_EQ(a.pairs[k].second, b.pairs[k].second);
  }
  const auto many = generate_pairs(ds, all_train(20), RelationKind::L1Label, {}, PairBudget::exactly(150), 4);
  std::set<std::pair<std::size_t, std::size_t>> distinct;
  for (const auto& p : many.pairs) distinct.insert({p.first, p.second});
  EXPECT_EQ(distinct.size(), 150u);

  const auto over = generate_pairs(ds, all_train(4), RelationKind::L1Label, {}, PairBudget::exactly(20), 4);
  EXPECT_EQ(over.size(), 20u);
  EXPECT_EQ(PairBudget::automatic().resolve(4), 6u);
  EXPECT_EQ(PairBudget::automatic().resolve(1000), 50000u);
}

TEST(Pairs, ScaledTargetsAndErrors) {
  Rng rng(3);
  const auto ds = fixtures::random_dataset(TaskKind::MultiLabel, 12, 2, 6, rng);
  const auto batch = generate_pairs(ds, all_train(12), RelationKind::L1Label,
                                    {TargetTransformSpec::Kind::ScaleToRange, 4.0}, PairBudget::all(), 0);
  double top = 0.0;
  for (const auto& p : batch.pairs) top = std::max(top, p.target);
  EXPECT_DOUBLE_EQ(top, 4.0);
  for (const auto& p : batch.pairs) {
    const double raw = g_l1(ds.labels().row(static_cast<Eigen::Index>(p.first)),
                            ds.labels().row(static_cast<Eigen::Index>(p.second)));
    EXPECT_DOUBLE_EQ(p.target, 4.0 * raw / batch.transform.fitted_max());
  }
  Split one;
  one.train = {0};
  try {
    generate_pairs(ds, one, RelationKind::L1Label, {}, PairBudget::all(), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewSamples);
  }
}

TEST(SelectBatch, RandomDrawsOnePair) {
  const auto ds = one_hot_dataset(8, 2, 2, 1);
  const auto pairs = generate_pairs(ds, all_train(8), RelationKind::L1Label, {}, PairBudget::all(), 0);
  const auto model = init_model(std::vector<std::size_t>{2, 3}, 0);
  Rng rng(1);
  EXPECT_EQ(select_batch(pairs, model, ds.features(), MiningSpec::random(), 1, rng).size(), 1u);
  EXPECT_EQ(select_batch(pairs, model, ds.features(), MiningSpec::random(), 7, rng).size(), 7u);
  PairBatch empty;
  try {
    select_batch(empty, model, ds.features(), MiningSpec::random(), 1, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyPairs);
  }
}

TEST(SelectBatch, HardTopKMatchesReferenceLoop) {
  const auto ds = one_hot_dataset(5, 2, 3, 7);
  const auto pairs = generate_pairs(ds, all_train(5), RelationKind::L1Label, {}, PairBudget::all(), 0);
  ASSERT_EQ(pairs.size(), 10u);
  Rng mrng(2);
  const auto model = fixtures::random_model({3, 4, 2}, mrng, true);

  // Reference: loss of each pair from the loop oracle, sorted descending.
  std::vector<std::pair<double, std::size_t>> ref;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs.pairs[k];
    const auto xi = oracle::to_rows(ds.features().row(static_cast<Eigen::Index>(p.first)))[0];
    const auto xj = oracle::to_rows(ds.features().row(static_cast<Eigen::Index>(p.second)))[0];
    ref.emplace_back(oracle::pair_loss(model, xi, xj, p.target, 0.0), k);
  }
  std::sort(ref.begin(), ref.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  for (std::size_t pool : {10u, 50u}) {
    Rng rng(5);
    const auto chosen = select_batch(pairs, model, ds.features(), MiningSpec::hard_top_k(pool, 2), 2, rng);
    ASSERT_EQ(chosen.size(), 2u);
    for (std::size_t b = 0; b < 2; ++b) {
      const auto& want = pairs.pairs[ref[b].second];
      EXPECT_EQ(chosen[b].first, want.first);
      EXPECT_EQ(chosen[b].second, want.second);
    }
  }
  Rng rng(5);
  const auto cycled = select_batch(pairs, model, ds.features(), MiningSpec::hard_top_k(10, 2), 5, rng);
  EXPECT_EQ(cycled[4].first, cycled[0].first);
  EXPECT_EQ(cycled[4].second, cycled[0].second);
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  const auto ds = one_hot_dataset(12, 3, 2, 1);
  auto cfg = small_config(2);
  cfg.learning_rate = 0.0;
  cfg.lambda = 0.5;
  const auto result = train(ds, holdout_last(12), cfg);
  const auto init = init_model(cfg.layer_sizes, mix_seed(cfg.seed, 0x1000), ModelOptions{true, false});
  EXPECT_TRUE(same_model(result.model, init));
}

TEST(Train, HeavyRegularizationShrinksWeights) {
  const auto ds = one_hot_dataset(12, 3, 2, 1);
  auto cfg = small_config(2);
  cfg.lambda = 1e6;
  cfg.lambda_per_pair = false;
  cfg.learning_rate = 1e-8;
  double previous = 1e300;
  for (std::size_t steps : {1u, 50u, 100u, 200u, 400u}) {
    cfg.max_iterations = steps;
    const auto result = train(ds, holdout_last(12), cfg);
    double norm = 0.0;
    for (const auto& layer : result.model.layers) norm += layer.weight.squaredNorm();
    EXPECT_LT(norm, previous);
    previous = norm;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(Train, DeterministicAcrossRunsAndThreads) {
  Rng rng(3);
  const auto ds = fixtures::random_dataset(TaskKind::MultiLabel, 30, 4, 3, rng);
  auto cfg = small_config(4);
  cfg.batch_size = 8;
  cfg.max_iterations = 100;
  const auto a = train(ds, holdout_last(30), cfg);
  const auto b = train(ds, holdout_last(30), cfg);
  cfg.threads = 3;
  const auto c = train(ds, holdout_last(30), cfg);
  EXPECT_TRUE(same_model(a.model, b.model));
  EXPECT_TRUE(same_model(a.model, c.model));
  EXPECT_EQ(a.log.loss, c.log.loss);
  cfg.seed = 4;
  EXPECT_FALSE(same_model(a.model, train(ds, holdout_last(30), cfg).model));
}

TEST(Train, LossDecreasesOnSeparableData) {
  const auto ds = fixtures::xor_dataset(200, 1);
  TrainConfig cfg;
  cfg.layer_sizes = {2, 10, 10, 4};
  cfg.learning_rate = 0.05;
  cfg.batch_size = 8;
  cfg.max_iterations = 3000;
  const auto result = train(ds, holdout_last(200), cfg);
  EXPECT_LT(result.log.ma_loss.back(), result.log.ma_loss[cfg.convergence.window - 1]);
}

TEST(Train, ConvergesOnConstantLoss) {
  const auto ds = one_hot_dataset(3, 2, 2, 1);
  auto cfg = small_config(2);
  cfg.learning_rate = 0.0;
  cfg.convergence.window = 10;
  cfg.max_iterations = 1000;
  const auto result = train(ds, holdout_last(3), cfg);
  EXPECT_EQ(result.log.stop_reason, StopReason::Converged);
  EXPECT_EQ(result.log.steps(), 20u);
  EXPECT_EQ(result.log.pair_count, 1u);
  const auto csv = result.log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,loss,ma_loss");
}

TEST(Train, DivergenceReportsStep) {
  const auto ds = one_hot_dataset(20, 2, 2, 1);
  auto cfg = small_config(2);
  cfg.learning_rate = 1e6;
  cfg.lambda = 0.1;
  try {
    train(ds, holdout_last(20), cfg);
    FAIL();
  } catch (const DivergedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::Diverged);
    EXPECT_GE(e.step(), 1);
    EXPECT_NE(std::string(e.what()).find(std::to_string(e.step())), std::string::npos);
  }
}

TEST(Train, ConfigErrors) {
  const auto ds = one_hot_dataset(10, 2, 2, 1);
  auto cfg = small_config(3);
  try {
    train(ds, holdout_last(10), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  cfg = small_config(2);
  cfg.mining = MiningSpec::hard_top_k(2, 5);
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config(2);
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config(2);
  cfg.layer_sizes = {2};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Train, HardMiningAndStepDecayRun) {
  const auto ds = one_hot_dataset(16, 2, 2, 1);
  auto cfg = small_config(2);
  cfg.mining = MiningSpec::hard_top_k(20, 4);
  cfg.batch_size = 4;
  cfg.step_decay = true;
  cfg.target_transform = {TargetTransformSpec::Kind::ScaleToRange, 4.0};
  const auto result = train(ds, holdout_last(16), cfg);
  EXPECT_EQ(result.log.steps(), 200u);
  EXPECT_EQ(result.transform.fitted_max(), 2.0);
}

TEST(Train, Invariants) {
  for (const auto& r : invariants::trainer_checks(1000, 13)) {
    EXPECT_TRUE(r.passed()) << r.name << ": " << r.failures << " failures, first: " << r.first_failure;
  }
}

}  // namespace
}  // namespace hraml
