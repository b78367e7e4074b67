#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "hraml/dataset.hpp"
#include "hraml/relation.hpp"
#include "hraml/trainer.hpp"

namespace hraml {

/// Quadratic pair relation (x_i - x_j)^T M (x_i - x_j) + b with symmetric M.
struct LinearMetric {
  Eigen::MatrixXd M;
  double b = 0.0;
  bool psd_projected = false;
};

struct LinearFit {
  LinearMetric metric;
  double residual_ss = 0.0;  // sum of squared residuals of the returned metric
  std::size_t pair_count = 0;

  double residual_rms() const;
};

/// Ridge regression of the pair targets onto <M, T_ij> + b, with
/// T_ij = (x_i - x_j)(x_i - x_j)^T.
///
/// M is parameterized by its upper triangle so symmetry is structural; the
/// penalty is ridge * ||M||_F^2 (off-diagonal entries count twice) and b is
/// unpenalized. The normal equations are solved by column-pivoted QR and a
/// rank-deficient system raises SingularSystem. With `project_psd`, negative
/// eigenvalues of M are clipped to zero afterward.
LinearFit fit_linear_pairs(const Eigen::MatrixXd& features, std::span<const Pair> pairs, double ridge,
                           bool project_psd);

LinearFit fit_linear(const Dataset& ds, const Split& split, RelationKind relation,
                     const TargetTransformSpec& transform, double ridge, bool project_psd,
                     PairBudget budget = PairBudget::automatic(), std::uint64_t seed = 0);

double metric_distance(const LinearMetric& lm, const Eigen::Ref<const Eigen::VectorXd>& xi,
                       const Eigen::Ref<const Eigen::VectorXd>& xj);

/// Nearest symmetric PSD matrix in Frobenius norm (eigenvalue clipping).
Eigen::MatrixXd project_to_psd(const Eigen::MatrixXd& m);

std::string linear_metric_to_json(const LinearMetric& lm);
LinearMetric linear_metric_from_json(const std::string& text);
void save_linear_metric(const LinearMetric& lm, const std::filesystem::path& path);

}  // namespace hraml
