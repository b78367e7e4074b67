#include "hraml/evaluators.hpp"

#include <algorithm>
#include <string>

#include "hraml/error.hpp"

namespace hraml {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

void require_binary(const Eigen::MatrixXd& labels) {
  for (Eigen::Index k = 0; k < labels.size(); ++k) {
    const double v = labels.data()[k];
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidLabel, "MLkNN needs 0/1 labels");
  }
}

}  // namespace

NeighborIndex::NeighborIndex(Eigen::MatrixXd references, Eigen::MatrixXd labels)
    : references_(std::move(references)), labels_(std::move(labels)) {
  if (references_.rows() == 0) throw Error(ErrorCode::EmptyIndex, "reference set is empty");
  if (labels_.rows() != references_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "reference and label row counts differ");
  }
}

NeighborIndex::NeighborIndex(Eigen::MatrixXd references, Eigen::MatrixXd labels, Eigen::MatrixXd metric)
    : NeighborIndex(std::move(references), std::move(labels)) {
  if (metric.rows() != references_.cols() || metric.cols() != references_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "metric matrix does not match the reference dimension");
  }
  metric_ = std::move(metric);
}

double NeighborIndex::distance(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t ref) const {
  const Eigen::VectorXd delta = query - references_.row(static_cast<Eigen::Index>(ref)).transpose();
  if (metric_) return delta.dot(*metric_ * delta);
  return delta.squaredNorm();
}

std::vector<Neighbor> NeighborIndex::nearest(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k,
                                             std::optional<std::size_t> exclude) const {
  if (query.size() != references_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "query has " + std::to_string(query.size()) + " dims, index has " +
                                                  std::to_string(references_.cols()));
  }
  const std::size_t available = size() - (exclude && *exclude < size() ? 1 : 0);
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (available == 0) throw Error(ErrorCode::EmptyIndex, "no references available");
  if (k > available) {
    throw Error(ErrorCode::InvalidArgument, "k = " + std::to_string(k) + " exceeds the " + std::to_string(available) +
                                                " available references");
  }
  std::vector<Neighbor> all;
  all.reserve(size());
  for (std::size_t r = 0; r < size(); ++r) {
    if (exclude && *exclude == r) continue;
    all.push_back({r, distance(query, r)});
  }
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k - 1), all.end(), closer);
  all.resize(k);
  std::sort(all.begin(), all.end(), closer);
  return all;
}

int knn_predict(const NeighborIndex& index, const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k) {
  const auto neighbors = index.nearest(query, k);
  const auto& labels = index.labels();
  std::vector<std::size_t> votes(static_cast<std::size_t>(labels.cols()), 0);
  std::vector<int> classes;
  classes.reserve(neighbors.size());
  for (const auto& nb : neighbors) {
    Eigen::Index cls = 0;
    labels.row(static_cast<Eigen::Index>(nb.index)).maxCoeff(&cls);
    classes.push_back(static_cast<int>(cls));
    ++votes[static_cast<std::size_t>(cls)];
  }
  const std::size_t best = *std::max_element(votes.begin(), votes.end());
  // Neighbors are closest first, so the first tied class met is the winner.
  for (int cls : classes) {
    if (votes[static_cast<std::size_t>(cls)] == best) return cls;
  }
  return classes.front();
}

MlknnModel mlknn_fit(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& labels, std::size_t k,
                     double smoothing) {
  if (!(smoothing > 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothing must be positive");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const auto n = static_cast<std::size_t>(embeddings.rows());
  if (n <= k) {
    throw Error(ErrorCode::TooFewSamples, "MLkNN needs more than k = " + std::to_string(k) + " training samples");
  }
  if (labels.rows() != embeddings.rows()) throw Error(ErrorCode::DimensionMismatch, "embedding and label rows differ");
  require_binary(labels);

  const Eigen::Index L = labels.cols();
  const auto K = static_cast<Eigen::Index>(k);
  MlknnModel model;
  model.k = k;
  model.smoothing = smoothing;
  model.prior = ((smoothing + labels.colwise().sum().array()) / (2.0 * smoothing + static_cast<double>(n))).transpose();

  Eigen::MatrixXd pos_counts = Eigen::MatrixXd::Zero(L, K + 1);
  Eigen::MatrixXd neg_counts = Eigen::MatrixXd::Zero(L, K + 1);
  const NeighborIndex index(embeddings, labels);
  for (std::size_t i = 0; i < n; ++i) {
    const auto neighbors = index.nearest(embeddings.row(static_cast<Eigen::Index>(i)).transpose(), k, i);
    Eigen::RowVectorXd counts = Eigen::RowVectorXd::Zero(L);
    for (const auto& nb : neighbors) counts += labels.row(static_cast<Eigen::Index>(nb.index));
    for (Eigen::Index l = 0; l < L; ++l) {
      const auto c = static_cast<Eigen::Index>(counts(l));
      if (labels(static_cast<Eigen::Index>(i), l) == 1.0) {
        pos_counts(l, c) += 1.0;
      } else {
        neg_counts(l, c) += 1.0;
      }
    }
  }
  const double denom_extra = smoothing * static_cast<double>(k + 1);
  model.cond_positive.resize(L, K + 1);
  model.cond_negative.resize(L, K + 1);
  for (Eigen::Index l = 0; l < L; ++l) {
    const double pos_total = pos_counts.row(l).sum();
    const double neg_total = neg_counts.row(l).sum();
    model.cond_positive.row(l) = (smoothing + pos_counts.row(l).array()) / (denom_extra + pos_total);
    model.cond_negative.row(l) = (smoothing + neg_counts.row(l).array()) / (denom_extra + neg_total);
  }
  return model;
}

MlknnPrediction mlknn_predict(const MlknnModel& model, const NeighborIndex& index,
                              const Eigen::Ref<const Eigen::VectorXd>& query) {
  const Eigen::Index L = model.prior.size();
  if (index.labels().cols() != L) throw Error(ErrorCode::DimensionMismatch, "index labels differ from model labels");
  const auto neighbors = index.nearest(query, model.k);
  Eigen::RowVectorXd counts = Eigen::RowVectorXd::Zero(L);
  for (const auto& nb : neighbors) counts += index.labels().row(static_cast<Eigen::Index>(nb.index));

  MlknnPrediction out{Eigen::VectorXd::Zero(L), Eigen::VectorXd::Zero(L)};
  for (Eigen::Index l = 0; l < L; ++l) {
    const auto c = static_cast<Eigen::Index>(counts(l));
    const double pos = model.prior(l) * model.cond_positive(l, c);
    const double neg = (1.0 - model.prior(l)) * model.cond_negative(l, c);
    out.labels(l) = pos >= neg ? 1.0 : 0.0;
    out.scores(l) = pos / (pos + neg);
  }
  return out;
}

Eigen::VectorXd aaknn_predict(const NeighborIndex& index, const Eigen::Ref<const Eigen::VectorXd>& query,
                              std::size_t k) {
  const auto neighbors = index.nearest(query, k);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(index.labels().cols());
  for (const auto& nb : neighbors) mean += index.labels().row(static_cast<Eigen::Index>(nb.index)).transpose();
  return mean / static_cast<double>(neighbors.size());
}

}  // namespace hraml
