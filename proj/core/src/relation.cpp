#include "hraml/relation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hraml/error.hpp"

namespace hraml {

std::string_view to_string(RelationKind kind) noexcept {
  switch (kind) {
    case RelationKind::L1Label: return "l1";
  }
  return "unknown";
}

RelationKind parse_relation_kind(std::string_view text) {
  if (text == "l1") return RelationKind::L1Label;
  throw Error(ErrorCode::SchemaError, "unknown relation '" + std::string(text) + "'");
}

double g_l1(std::span<const double> yi, std::span<const double> yj) {
  if (yi.size() != yj.size()) throw Error(ErrorCode::LengthMismatch, "label rows differ in length");
  double sum = 0.0;
  for (std::size_t l = 0; l < yi.size(); ++l) sum += std::abs(yi[l] - yj[l]);
  return sum;
}

double g_l1(const Eigen::Ref<const Eigen::RowVectorXd>& yi, const Eigen::Ref<const Eigen::RowVectorXd>& yj) {
  if (yi.size() != yj.size()) throw Error(ErrorCode::LengthMismatch, "label rows differ in length");
  double sum = 0.0;
  for (Eigen::Index l = 0; l < yi.size(); ++l) sum += std::abs(yi(l) - yj(l));
  return sum;
}

double relation_value(RelationKind kind, const Eigen::Ref<const Eigen::RowVectorXd>& yi,
                      const Eigen::Ref<const Eigen::RowVectorXd>& yj) {
  switch (kind) {
    case RelationKind::L1Label: return g_l1(yi, yj);
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled relation");
}

double feature_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error(ErrorCode::LengthMismatch, "embeddings differ in length");
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double diff = u[k] - v[k];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double feature_distance(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size()) throw Error(ErrorCode::LengthMismatch, "embeddings differ in length");
  return (u - v).norm();
}

TargetTransform fit_target_transform(std::span<const double> targets, const TargetTransformSpec& spec) {
  if (targets.empty()) throw Error(ErrorCode::DegenerateTargets, "no targets to fit");
  TargetTransform t;
  t.kind_ = spec.kind;
  if (spec.kind == TargetTransformSpec::Kind::Identity) return t;
  if (!(spec.max > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale range must be positive");
  const double g_max = *std::max_element(targets.begin(), targets.end());
  if (!(g_max > 0.0)) throw Error(ErrorCode::DegenerateTargets, "all training targets are zero");
  t.range_max_ = spec.max;
  t.fitted_max_ = g_max;
  return t;
}

}  // namespace hraml
