#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hraml/network.hpp"

namespace hraml {

/// Which analytic gradient a check compares against central differences.
enum class GradientRoute {
  Normalized,    // pair_backward with output normalization
  Unnormalized,  // pair_backward without normalization
  ClosedForm,    // pair_backward_closed_form (delta recursion), no normalization
};

std::string to_string(GradientRoute route);

struct GradCheckConfig {
  std::size_t trials = 100;
  double tolerance = 1e-5;
  /// Absolute floor below which a coordinate passes regardless of its
  /// relative error; defaults to tolerance * 1e-3 when unset.
  std::optional<double> abs_tolerance;
  double step = 1e-6;
  std::size_t max_layers = 4;
  std::size_t max_width = 10;
  /// Fixed layer sizes; random architectures when empty.
  std::vector<std::size_t> architecture;
  std::vector<GradientRoute> routes{GradientRoute::Normalized, GradientRoute::Unnormalized, GradientRoute::ClosedForm};
  std::uint64_t seed = 0;
};

struct GradCheckCoordinate {
  std::size_t trial = 0;
  GradientRoute route = GradientRoute::Normalized;
  std::vector<std::size_t> architecture;
  std::size_t layer = 0;  // 1-based
  bool is_bias = false;
  std::size_t row = 0;
  std::size_t col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::size_t trials = 0;
  std::size_t coordinates = 0;
  std::size_t failures = 0;
  /// Coordinates within the absolute floor count as relative error 0.
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  GradCheckCoordinate worst;

  bool passed() const { return failures == 0; }
};

/// Central-difference derivative of the pair loss with respect to every
/// parameter, computed from forward passes only.
PairGradient finite_difference_gradient(const MlpModel& model, const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                                        double target, double lambda, double step);

GradCheckReport run_gradcheck(const GradCheckConfig& config);

}  // namespace hraml
