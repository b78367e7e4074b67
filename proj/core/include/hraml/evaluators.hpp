#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

namespace hraml {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;  // squared Euclidean, or the quadratic form for a metric index
};

/// Exact neighbor search over a fixed reference set.
///
/// Distances are squared Euclidean in embedding space, or
/// (x - r)^T M (x - r) when built with a metric matrix (the linear baseline;
/// its offset b does not change neighbor order and is not used). Equal
/// distances are ordered by the lower reference index.
class NeighborIndex {
 public:
  NeighborIndex(Eigen::MatrixXd references, Eigen::MatrixXd labels);
  NeighborIndex(Eigen::MatrixXd references, Eigen::MatrixXd labels, Eigen::MatrixXd metric);

  std::size_t size() const noexcept { return static_cast<std::size_t>(references_.rows()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(references_.cols()); }
  const Eigen::MatrixXd& references() const noexcept { return references_; }
  const Eigen::MatrixXd& labels() const noexcept { return labels_; }

  double distance(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t ref) const;

  /// The k nearest references, closest first. `exclude` drops one reference
  /// (leave-one-out over the reference set itself).
  std::vector<Neighbor> nearest(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k,
                                std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  Eigen::MatrixXd references_;
  Eigen::MatrixXd labels_;
  std::optional<Eigen::MatrixXd> metric_;
};

/// Majority vote over one-hot labels of the k nearest. A vote tie goes to the
/// tied class that owns the nearest neighbor.
int knn_predict(const NeighborIndex& index, const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k);

inline constexpr std::size_t kDefaultMlknnK = 10;
inline constexpr double kDefaultMlknnSmoothing = 1.0;

/// Per-label Bayesian model over neighbor label counts.
struct MlknnModel {
  std::size_t k = kDefaultMlknnK;
  double smoothing = kDefaultMlknnSmoothing;
  Eigen::VectorXd prior;          // P(H_l)
  Eigen::MatrixXd cond_positive;  // L x (k+1), row l: P(E_c | H_l)
  Eigen::MatrixXd cond_negative;  // L x (k+1), row l: P(E_c | not H_l)
};

/// Fits from leave-one-out neighborhoods of the training embeddings:
///   P(H_l) = (s + sum_i y_il) / (2s + n)
///   P(E_c | H_l) = (s + #{i : y_il = 1, c_il = c}) / (s (k + 1) + #{i : y_il = 1})
/// and likewise for the negatives.
MlknnModel mlknn_fit(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& labels, std::size_t k = kDefaultMlknnK,
                     double smoothing = kDefaultMlknnSmoothing);

struct MlknnPrediction {
  Eigen::VectorXd labels;  // 0/1
  Eigen::VectorXd scores;  // posterior P(H_l | E_c)
};

/// Predicts label l iff P(H_l) P(E_c|H_l) >= P(not H_l) P(E_c|not H_l).
MlknnPrediction mlknn_predict(const MlknnModel& model, const NeighborIndex& index,
                              const Eigen::Ref<const Eigen::VectorXd>& query);

/// Mean label distribution of the k nearest references.
Eigen::VectorXd aaknn_predict(const NeighborIndex& index, const Eigen::Ref<const Eigen::VectorXd>& query,
                              std::size_t k);

}  // namespace hraml
