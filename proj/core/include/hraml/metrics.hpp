#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hraml {

/// Fraction of exact matches.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

struct MultilabelMetrics {
  double hamming_loss = 0.0;
  double ranking_loss = 0.0;
  double one_error = 0.0;
  double coverage = 0.0;
  double average_precision = 0.0;
  /// Samples with no relevant or only relevant labels; they count toward
  /// Hamming loss but not the four ranking measures.
  std::size_t excluded = 0;
};

/// Rows are samples, columns labels. Ranking conventions:
///  - rank(l) = #{l' : score(l') >= score(l)}, so tied labels share the worse rank;
///  - a tied (relevant, irrelevant) pair counts 1/2 toward ranking loss;
///  - one-error counts the irrelevant fraction of the labels tied for the top
///    score, so it does not depend on label order;
///  - coverage is max rank over relevant labels minus 1.
MultilabelMetrics multilabel_metrics(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& predicted,
                                     const Eigen::MatrixXd& truth);

struct LdlMetrics {
  double chebyshev = 0.0;
  double clark = 0.0;
  double canberra = 0.0;
  double cosine = 0.0;
  double intersection = 0.0;
};

/// Sample means; Clark and Canberra terms with d_j + p_j = 0 contribute 0.
LdlMetrics ldl_metrics(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth);

enum class Orientation { HigherBetter, LowerBetter };

std::string_view to_string(Orientation o) noexcept;

/// Orientation of the canonical metric names; nullopt for unknown names.
std::optional<Orientation> canonical_orientation(std::string_view metric);

/// Snake-case names in report order.
inline constexpr std::string_view kSingleLabelMetrics[] = {"accuracy"};
inline constexpr std::string_view kMultilabelMetrics[] = {"hamming_loss", "ranking_loss", "one_error", "coverage",
                                                          "average_precision"};
inline constexpr std::string_view kLdlMetrics[] = {"chebyshev", "clark", "canberra", "cosine", "intersection"};

struct MetricSeries {
  Orientation orientation = Orientation::HigherBetter;
  std::vector<double> values;

  double mean() const;
  /// Sample standard deviation (n - 1); 0 for a single run.
  double stddev() const;
};

/// Per-metric values over repeated runs, reported as mean and sample std.
class EvalReport {
 public:
  std::string dataset;
  std::string model;
  /// Unset by default so that reports are reproducible byte for byte.
  std::optional<std::string> timestamp;

  /// Canonical names take their fixed orientation; other names need one.
  void record(const std::string& name, double value, std::optional<Orientation> orientation = std::nullopt);
  void record(const MultilabelMetrics& m);
  void record(const LdlMetrics& m);
  void note(const std::string& key, double value) { notes_[key] = value; }

  const std::map<std::string, MetricSeries>& metrics() const noexcept { return metrics_; }
  const std::map<std::string, double>& notes() const noexcept { return notes_; }
  const MetricSeries& at(const std::string& name) const;

  std::string to_json() const;
  /// Header line plus one row: name_mean, name_std per metric.
  std::string to_csv() const;

 private:
  std::map<std::string, MetricSeries> metrics_;
  std::map<std::string, double> notes_;
};

}  // namespace hraml
