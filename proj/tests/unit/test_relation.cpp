#include <gtest/gtest.h>

#include <vector>

#include "hraml/error.hpp"
#include "hraml/relation.hpp"
#include "invariants.hpp"

namespace hraml {
namespace {

TEST(Relation, L1Examples) {
  const std::vector<double> a{1, 0, 0};
  const std::vector<double> b{0, 1, 0};
  EXPECT_EQ(g_l1(a, b), 2.0);
  EXPECT_EQ(g_l1(a, a), 0.0);
  const std::vector<double> p{0.5, 0.3, 0.2};
  const std::vector<double> q{0.2, 0.3, 0.5};
  EXPECT_NEAR(g_l1(p, q), 0.6, 1e-15);
  Eigen::RowVectorXd u(3);
  Eigen::RowVectorXd v(3);
  u << 0.5, 0.3, 0.2;
  v << 0.2, 0.3, 0.5;
  EXPECT_EQ(g_l1(u, v), g_l1(p, q));
  EXPECT_EQ(relation_value(RelationKind::L1Label, u, v), g_l1(u, v));
}

TEST(Relation, LengthMismatch) {
  const std::vector<double> a{1, 0};
  const std::vector<double> b{1, 0, 0};
  try {
    g_l1(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  EXPECT_THROW(feature_distance(a, b), Error);
}

TEST(Relation, FeatureDistanceExamples) {
  const std::vector<double> u{0.6, 0.8};
  const std::vector<double> neg{-0.6, -0.8};
  EXPECT_DOUBLE_EQ(feature_distance(u, neg), 2.0);
  EXPECT_EQ(feature_distance(u, u), 0.0);
  EXPECT_EQ(feature_distance(std::vector<double>{3, 4}, std::vector<double>{0, 0}), 5.0);
}

TEST(Relation, TargetTransforms) {
  const std::vector<double> targets{0.0, 2.0};
  const auto scale = fit_target_transform(targets, {TargetTransformSpec::Kind::ScaleToRange, 4.0});
  EXPECT_EQ(scale(2.0), 4.0);
  EXPECT_EQ(scale(0.0), 0.0);
  EXPECT_EQ(scale.fitted_max(), 2.0);
  const auto id = fit_target_transform(targets, {});
  EXPECT_EQ(id(2.0), 2.0);
  const std::vector<double> zeros{0.0, 0.0};
  try {
    fit_target_transform(zeros, {TargetTransformSpec::Kind::ScaleToRange, 4.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateTargets);
  }
}

TEST(Relation, KindNames) {
  EXPECT_EQ(to_string(RelationKind::L1Label), "l1");
  EXPECT_EQ(parse_relation_kind("l1"), RelationKind::L1Label);
  EXPECT_THROW(parse_relation_kind("kl"), Error);
}

TEST(Relation, Invariants) {
  for (const auto& r : invariants::relation_checks(10000, 5)) {
    EXPECT_TRUE(r.passed()) << r.name << ": " << r.failures << " failures, first: " << r.first_failure;
  }
}

}  // namespace
}  // namespace hraml
