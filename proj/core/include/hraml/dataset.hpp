#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hraml {

enum class TaskKind { SingleLabel, MultiLabel, LabelDistribution };

std::string_view to_string(TaskKind kind) noexcept;
/// Accepts "single_label", "multi_label", "label_distribution".
TaskKind parse_task_kind(std::string_view text);

/// Label rows within this distance of a unit sum are renormalized on load;
/// anything further is rejected.
inline constexpr double kDistributionSumSlack = 0.1;

/// Immutable feature/label pair. Rows are samples.
///
/// Label semantics depend on the task kind: one-hot rows for single-label
/// data, 0/1 entries for multi-label data, and rows summing to one for
/// label-distribution data. `create` validates (and for distributions
/// renormalizes) so every Dataset in circulation satisfies its kind's rules.
class Dataset {
 public:
  static Dataset create(Eigen::MatrixXd features, Eigen::MatrixXd labels, TaskKind kind,
                        std::vector<std::string> feature_names = {},
                        std::vector<std::string> label_names = {});

  const Eigen::MatrixXd& features() const noexcept { return features_; }
  const Eigen::MatrixXd& labels() const noexcept { return labels_; }
  TaskKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<std::string>& label_names() const noexcept { return label_names_; }

  std::size_t size() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(features_.cols()); }
  std::size_t num_labels() const noexcept { return static_cast<std::size_t>(labels_.cols()); }

  /// Column index of the 1 in each one-hot row. SingleLabel only.
  std::vector<int> class_ids() const;

  Dataset with_features(Eigen::MatrixXd features) const;

 private:
  Dataset() = default;

  Eigen::MatrixXd features_;
  Eigen::MatrixXd labels_;
  TaskKind kind_ = TaskKind::SingleLabel;
  std::vector<std::string> feature_names_;
  std::vector<std::string> label_names_;
};

/// Which CSV columns hold labels. Text forms:
///   "last:N" / "first:N"   trailing or leading N columns
///   "class:NAME"           one categorical column, expanded to one-hot
///   "NAME,NAME,..."        explicit header names
///   "#3,#4"                explicit zero-based column positions
struct LabelColumns {
  enum class Mode { Last, First, Names, Positions, ClassColumn };

  Mode mode = Mode::Last;
  std::size_t count = 1;
  std::vector<std::string> names;
  std::vector<std::size_t> positions;

  static LabelColumns parse(std::string_view text);
  std::string to_string() const;
};

Dataset load_csv(const std::filesystem::path& path, TaskKind kind, const LabelColumns& labels);
Dataset parse_csv(std::string_view text, TaskKind kind, const LabelColumns& labels);

/// Header row followed by features then labels; reload with `last:L`.
std::string to_csv(const Dataset& ds);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

/// Sparse text format, one sample per line:
///   LABELS IDX:VAL IDX:VAL ...
/// Feature indices are 1-based. LABELS is a class id (single-label), a
/// comma-separated list of positive label ids or "-" for none (multi-label),
/// or comma-separated probabilities (label distribution). An optional first
/// line "#dims D L" fixes the dimensions; otherwise they are inferred.
Dataset load_sparse(const std::filesystem::path& path, TaskKind kind);
Dataset parse_sparse(std::string_view text, TaskKind kind);
std::string to_sparse(const Dataset& ds);
void save_sparse(const Dataset& ds, const std::filesystem::path& path);

/// Per-feature affine map fitted by `standardize_features`.
struct FeatureTransform {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // population standard deviation; 0 marks a constant column

  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

/// Zero mean, unit population standard deviation (divide by n) per column.
/// Constant columns map to all zeros.
std::pair<Dataset, FeatureTransform> standardize_features(const Dataset& ds);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded split with round(test_fraction * n) test samples. Single-label data
/// is stratified (largest-remainder allocation per class) when every class has
/// at least two samples.
Split split(const Dataset& ds, double test_fraction, std::uint64_t seed);

void validate_split(const Split& s, std::size_t n);

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows);

}  // namespace hraml
