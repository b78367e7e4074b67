#pragma once

#include <Eigen/Dense>
#include <span>
#include <string_view>

namespace hraml {

/// Decision-space relation between two label rows.
///
/// Only the L1 relation exists today. A new relation (a KL divergence for
/// label distributions, a learned parametric form) is added as another
/// enumerator plus a branch in `relation_value`; it must stay symmetric and
/// non-negative with g(y, y) = 0, which the pair generator relies on.
enum class RelationKind { L1Label };

std::string_view to_string(RelationKind kind) noexcept;
RelationKind parse_relation_kind(std::string_view text);

/// Sum of absolute label differences.
double g_l1(std::span<const double> yi, std::span<const double> yj);
double g_l1(const Eigen::Ref<const Eigen::RowVectorXd>& yi, const Eigen::Ref<const Eigen::RowVectorXd>& yj);

double relation_value(RelationKind kind, const Eigen::Ref<const Eigen::RowVectorXd>& yi,
                      const Eigen::Ref<const Eigen::RowVectorXd>& yj);

/// Euclidean distance between two embeddings.
double feature_distance(std::span<const double> u, std::span<const double> v);
double feature_distance(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Optional rescaling of regression targets.
///
/// Normalized embeddings keep squared distances in [0, 4] while the L1
/// relation reaches L for multi-label data. ScaleToRange maps the largest
/// training target onto `max` so every target stays reachable.
struct TargetTransformSpec {
  enum class Kind { Identity, ScaleToRange };
  Kind kind = Kind::Identity;
  double max = 4.0;
};

class TargetTransform {
 public:
  TargetTransform() = default;

  static TargetTransform identity() { return {}; }

  TargetTransformSpec::Kind kind() const noexcept { return kind_; }
  double range_max() const noexcept { return range_max_; }
  /// Largest training target seen during the fit (ScaleToRange only).
  double fitted_max() const noexcept { return fitted_max_; }

  double operator()(double target) const noexcept {
    return kind_ == TargetTransformSpec::Kind::Identity ? target : range_max_ * target / fitted_max_;
  }

 private:
  friend TargetTransform fit_target_transform(std::span<const double>, const TargetTransformSpec&);

  TargetTransformSpec::Kind kind_ = TargetTransformSpec::Kind::Identity;
  double range_max_ = 1.0;
  double fitted_max_ = 1.0;
};

TargetTransform fit_target_transform(std::span<const double> targets, const TargetTransformSpec& spec);

}  // namespace hraml
