#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hraml/dataset.hpp"
#include "hraml/network.hpp"
#include "hraml/random.hpp"
#include "hraml/relation.hpp"

namespace hraml {

/// How many training pairs to generate.
struct PairBudget {
  enum class Kind { Auto, All, Count };
  Kind kind = Kind::Auto;
  std::size_t count = 0;

  static PairBudget automatic() { return {}; }
  static PairBudget all() { return {Kind::All, 0}; }
  static PairBudget exactly(std::size_t n) { return {Kind::Count, n}; }

  /// Auto resolves to min(all pairs, 50 * n_train).
  std::size_t resolve(std::size_t n_train) const;
};

struct MiningSpec {
  enum class Kind { Random, HardTopK };
  Kind kind = Kind::Random;
  std::size_t pool = 0;
  std::size_t keep = 0;

  static MiningSpec random() { return {}; }
  static MiningSpec hard_top_k(std::size_t pool, std::size_t keep) { return {Kind::HardTopK, pool, keep}; }
};

struct ConvergenceSpec {
  std::size_t window = 500;
  double rel_tol = 1e-4;
};

struct TrainConfig {
  std::vector<std::size_t> layer_sizes;
  double learning_rate = 0.01;
  std::size_t max_iterations = 10000;
  double lambda = 0.0;
  /// Divide lambda by the number of training pairs before applying it per pair,
  /// so the per-step regularization sums to lambda over one pass of the pairs.
  bool lambda_per_pair = true;
  std::size_t batch_size = 1;
  PairBudget pairs;
  MiningSpec mining;
  std::uint64_t seed = 0;
  RelationKind relation = RelationKind::L1Label;
  TargetTransformSpec target_transform;
  ConvergenceSpec convergence;
  bool normalize_output = true;
  bool linear_output = false;
  /// Halve the learning rate every max_iterations / 4 steps.
  bool step_decay = false;
  std::size_t threads = 1;

  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
};

struct Pair {
  std::size_t first = 0;
  std::size_t second = 0;
  double target = 0.0;
};

struct PairBatch {
  std::vector<Pair> pairs;
  /// Transform already applied to every target.
  TargetTransform transform;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
};

/// Pairs of training samples with their decision-space targets.
///
/// All: every unordered pair (i < j) of the training indices, in order.
/// Count: that many distinct unordered pairs drawn uniformly without
/// replacement, or with replacement once the count exceeds the total.
/// Targets are the relation values after a target transform fitted on them.
PairBatch generate_pairs(const Dataset& ds, const Split& split, RelationKind relation,
                         const TargetTransformSpec& transform, PairBudget budget, std::uint64_t seed);

/// The pair set `train` generates for this config and split.
PairBatch training_pairs(const Dataset& ds, const Split& split, const TrainConfig& config);

/// Data term 1/4 (D^2 - target)^2 of one pair under the current model.
double pair_data_loss(const MlpModel& model, const Eigen::MatrixXd& features, const Pair& pair);

/// Random: batch_size uniform draws with replacement.
/// HardTopK: draw `pool` distinct candidates (clamped to the pair count),
/// rank them by current loss and keep the `keep` largest; the batch cycles
/// through the kept pairs from the hardest down.
std::vector<Pair> select_batch(const PairBatch& pairs, const MlpModel& model, const Eigen::MatrixXd& features,
                               const MiningSpec& mining, std::size_t batch_size, Rng& rng);

enum class StopReason { MaxIterations, Converged };
std::string_view to_string(StopReason reason) noexcept;

struct TrainLog {
  std::vector<double> loss;     // mean batch loss before each update
  std::vector<double> ma_loss;  // moving average over the convergence window
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  StopReason stop_reason = StopReason::MaxIterations;
  std::size_t pair_count = 0;

  std::size_t steps() const noexcept { return loss.size(); }
  std::string to_csv() const;
};

struct TrainResult {
  MlpModel model;
  TrainLog log;
  TargetTransform transform;
};

/// SGD over relation-aligned pairs. Deterministic per seed for any thread
/// count: per-pair gradients are summed in pair order.
TrainResult train(const Dataset& ds, const Split& split, const TrainConfig& config);

/// Same loop on an explicit pair set and starting model.
TrainResult train_on_pairs(const Eigen::MatrixXd& features, const PairBatch& pairs, MlpModel model,
                           const TrainConfig& config);

}  // namespace hraml
