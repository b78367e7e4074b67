#include "hraml/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "hraml/error.hpp"
#include "hraml/io.hpp"

namespace hraml {

namespace {

// Independent streams derived from the one user-facing seed.
constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kPairStream = 0x2000;
constexpr std::uint64_t kBatchStream = 0x3000;

// Distinct positions from [0, n), in draw order.
std::vector<std::size_t> draw_distinct(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  if (count * 2 > n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(all[i], all[i + rng.uniform_index(n - i)]);
      out.push_back(all[i]);
    }
    return out;
  }
  std::unordered_set<std::size_t> seen;
  while (out.size() < count) {
    const std::size_t k = rng.uniform_index(n);
    if (seen.insert(k).second) out.push_back(k);
  }
  return out;
}

std::pair<std::size_t, std::size_t> draw_unordered(std::size_t m, Rng& rng) {
  std::size_t a = rng.uniform_index(m);
  std::size_t b = rng.uniform_index(m - 1);
  if (b >= a) ++b;
  return {std::min(a, b), std::max(a, b)};
}

}  // namespace

std::size_t PairBudget::resolve(std::size_t n_train) const {
  const std::size_t total = n_train < 2 ? 0 : n_train * (n_train - 1) / 2;
  switch (kind) {
    case Kind::All: return total;
    case Kind::Count: return count;
    case Kind::Auto: return std::min(total, 50 * n_train);
  }
  return total;
}

void TrainConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (layer_sizes.size() < 2) fail("layer_sizes needs at least input and output sizes");
  for (auto s : layer_sizes) {
    if (s < 1) fail("layer sizes must be positive");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be finite and >= 0");
  if (max_iterations < 1) fail("max_iterations must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be finite and >= 0");
  if (batch_size < 1) fail("batch_size must be positive");
  if (pairs.kind == PairBudget::Kind::Count && pairs.count < 1) fail("pair count must be positive");
  if (mining.kind == MiningSpec::Kind::HardTopK) {
    if (mining.pool < 1 || mining.keep < 1) fail("hard mining pool and keep must be positive");
    if (mining.keep > mining.pool) fail("hard mining keep must not exceed pool");
  }
  if (convergence.window < 1) fail("convergence window must be positive");
  if (!(convergence.rel_tol >= 0.0)) fail("convergence rel_tol must be >= 0");
  if (target_transform.kind == TargetTransformSpec::Kind::ScaleToRange && !(target_transform.max > 0.0)) {
    fail("target_transform max must be positive");
  }
  if (threads < 1) fail("threads must be positive");
}

PairBatch generate_pairs(const Dataset& ds, const Split& split, RelationKind relation,
                         const TargetTransformSpec& transform, PairBudget budget, std::uint64_t seed) {
  const auto& train = split.train;
  const std::size_t m = train.size();
  if (m < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 training samples to form pairs");
  for (auto i : train) {
    if (i >= ds.size()) throw Error(ErrorCode::DimensionMismatch, "split index out of range");
  }
  const std::size_t total = m * (m - 1) / 2;
  const std::size_t count = budget.resolve(m);
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "pair budget is zero");

  std::vector<std::pair<std::size_t, std::size_t>> positions;
  positions.reserve(count);
  Rng rng(seed);
  const bool enumerate = budget.kind == PairBudget::Kind::All ||
                         (budget.kind == PairBudget::Kind::Auto && count == total);
  if (enumerate) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) positions.emplace_back(a, b);
    }
  } else if (count > total) {
    for (std::size_t k = 0; k < count; ++k) positions.push_back(draw_unordered(m, rng));
  } else {
    // Rank k <-> (a, b) over the upper triangle, so distinct ranks are distinct pairs.
    for (auto rank : draw_distinct(total, count, rng)) {
      std::size_t a = 0;
      std::size_t row_len = m - 1;
      while (rank >= row_len) {
        rank -= row_len;
        ++a;
        --row_len;
      }
      positions.emplace_back(a, a + 1 + rank);
    }
  }

  PairBatch batch;
  batch.pairs.reserve(positions.size());
  std::vector<double> raw;
  raw.reserve(positions.size());
  for (auto [a, b] : positions) {
    const std::size_t i = train[a];
    const std::size_t j = train[b];
    const double g = relation_value(relation, ds.labels().row(static_cast<Eigen::Index>(i)),
                                    ds.labels().row(static_cast<Eigen::Index>(j)));
    raw.push_back(g);
    batch.pairs.push_back({i, j, g});
  }
  batch.transform = fit_target_transform(raw, transform);
  for (auto& p : batch.pairs) p.target = batch.transform(p.target);
  return batch;
}

double pair_data_loss(const MlpModel& model, const Eigen::MatrixXd& features, const Pair& pair) {
  const auto ti = forward(model, features.row(static_cast<Eigen::Index>(pair.first)).transpose());
  const auto tj = forward(model, features.row(static_cast<Eigen::Index>(pair.second)).transpose());
  return pair_loss(model, ti, tj, pair.target, 0.0);
}

std::vector<Pair> select_batch(const PairBatch& pairs, const MlpModel& model, const Eigen::MatrixXd& features,
                               const MiningSpec& mining, std::size_t batch_size, Rng& rng) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "no pairs to select from");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
  std::vector<Pair> batch;
  batch.reserve(batch_size);
  if (mining.kind == MiningSpec::Kind::Random) {
    for (std::size_t b = 0; b < batch_size; ++b) batch.push_back(pairs.pairs[rng.uniform_index(pairs.size())]);
    return batch;
  }
  if (mining.pool < 1 || mining.keep < 1 || mining.keep > mining.pool) {
    throw Error(ErrorCode::InvalidArgument, "hard mining needs 1 <= keep <= pool");
  }
  const std::size_t pool = std::min(mining.pool, pairs.size());
  const std::size_t keep = std::min(mining.keep, pool);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(pool);
  for (auto k : draw_distinct(pairs.size(), pool, rng)) {
    scored.emplace_back(pair_data_loss(model, features, pairs.pairs[k]), k);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t b = 0; b < batch_size; ++b) batch.push_back(pairs.pairs[scored[b % keep].second]);
  return batch;
}

std::string_view to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Converged: return "converged";
  }
  return "unknown";
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out << "step,loss,ma_loss\n";
  for (std::size_t t = 0; t < loss.size(); ++t) {
    out << (t + 1) << "," << io::format_double(loss[t]) << "," << io::format_double(ma_loss[t]) << "\n";
  }
  return out.str();
}

TrainResult train_on_pairs(const Eigen::MatrixXd& features, const PairBatch& pairs, MlpModel model,
                           const TrainConfig& config) {
  config.validate();
  model.validate();
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "no training pairs");
  if (static_cast<std::size_t>(features.cols()) != model.input_size()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset has " + std::to_string(features.cols()) +
                                                  " features, model expects " + std::to_string(model.input_size()));
  }
  const auto started = std::chrono::steady_clock::now();
  Rng rng(mix_seed(config.seed, kBatchStream));
  const double lambda = config.lambda_per_pair ? config.lambda / static_cast<double>(pairs.size()) : config.lambda;
  const std::size_t window = config.convergence.window;
  const std::size_t decay_every = std::max<std::size_t>(1, config.max_iterations / 4);

  TrainResult result;
  result.transform = pairs.transform;
  auto& log = result.log;
  log.seed = config.seed;
  log.pair_count = pairs.size();
  log.loss.reserve(config.max_iterations);
  log.ma_loss.reserve(config.max_iterations);
  double window_sum = 0.0;

  std::vector<PairResult> per_pair;
  for (std::size_t step = 0; step < config.max_iterations; ++step) {
    const auto step_number = static_cast<std::int64_t>(step + 1);
    const double lr = config.step_decay
                          ? config.learning_rate * std::pow(0.5, static_cast<double>(step / decay_every))
                          : config.learning_rate;
    const auto batch = select_batch(pairs, model, features, config.mining, config.batch_size, rng);

    per_pair.assign(batch.size(), PairResult{});
    const auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t b = begin; b < end; ++b) {
        const auto ti = forward(model, features.row(static_cast<Eigen::Index>(batch[b].first)).transpose());
        const auto tj = forward(model, features.row(static_cast<Eigen::Index>(batch[b].second)).transpose());
        per_pair[b] = pair_backward(model, ti, tj, batch[b].target, lambda);
      }
    };
    const std::size_t workers = std::min(config.threads, batch.size());
    if (workers <= 1) {
      work(0, batch.size());
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (batch.size() + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(batch.size(), begin + chunk);
        if (begin < end) pool.emplace_back(work, begin, end);
      }
    }

    // Fixed-order reduction keeps the result independent of the worker count.
    PairGradient grad = std::move(per_pair[0].grad);
    double loss = per_pair[0].loss;
    for (std::size_t b = 1; b < per_pair.size(); ++b) {
      grad += per_pair[b].grad;
      loss += per_pair[b].loss;
    }
    const double inv = 1.0 / static_cast<double>(per_pair.size());
    grad *= inv;
    loss *= inv;
    if (!std::isfinite(loss) || !grad.all_finite()) throw DivergedError(step_number, "loss or gradient is not finite");

    log.loss.push_back(loss);
    window_sum += loss;
    if (step >= window) window_sum -= log.loss[step - window];
    const std::size_t span = std::min(step + 1, window);
    log.ma_loss.push_back(window_sum / static_cast<double>(span));

    apply_update(model, grad, lr);
    for (const auto& layer : model.layers) {
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
        throw DivergedError(step_number, "parameters left the finite range");
      }
    }

    if (step + 1 >= 2 * window) {
      const double now = log.ma_loss[step];
      const double before = log.ma_loss[step - window];
      const double change = std::abs(now - before);
      const bool converged = before == 0.0 ? change == 0.0 : change / before < config.convergence.rel_tol;
      if (converged) {
        log.stop_reason = StopReason::Converged;
        break;
      }
    }
  }
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.model = std::move(model);
  return result;
}

PairBatch training_pairs(const Dataset& ds, const Split& split, const TrainConfig& config) {
  return generate_pairs(ds, split, config.relation, config.target_transform, config.pairs,
                        mix_seed(config.seed, kPairStream));
}

TrainResult train(const Dataset& ds, const Split& split, const TrainConfig& config) {
  config.validate();
  validate_split(split, ds.size());
  if (config.layer_sizes.front() != ds.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "layer_sizes[0] is " + std::to_string(config.layer_sizes.front()) +
                                                  " but the dataset has " + std::to_string(ds.dims()) + " features");
  }
  const auto pairs = training_pairs(ds, split, config);
  auto model = init_model(config.layer_sizes, mix_seed(config.seed, kInitStream),
                          ModelOptions{config.normalize_output, config.linear_output});
  return train_on_pairs(ds.features(), pairs, std::move(model), config);
}

}  // namespace hraml
