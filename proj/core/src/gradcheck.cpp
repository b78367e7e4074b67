#include "hraml/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hraml/error.hpp"
#include "hraml/random.hpp"

namespace hraml {

namespace {

double loss_at(const MlpModel& model, const Eigen::VectorXd& xi, const Eigen::VectorXd& xj, double target,
               double lambda) {
  return pair_loss(model, forward(model, xi), forward(model, xj), target, lambda);
}

}  // namespace

std::string to_string(GradientRoute route) {
  switch (route) {
    case GradientRoute::Normalized: return "normalized";
    case GradientRoute::Unnormalized: return "unnormalized";
    case GradientRoute::ClosedForm: return "closed_form";
  }
  return "unknown";
}

PairGradient finite_difference_gradient(const MlpModel& model, const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                                        double target, double lambda, double step) {
  MlpModel probe = model;
  PairGradient grad = PairGradient::zeros_like(model);
  const auto central = [&](double& param) {
    const double saved = param;
    param = saved + step;
    const double up = loss_at(probe, xi, xj, target, lambda);
    param = saved - step;
    const double down = loss_at(probe, xi, xj, target, lambda);
    param = saved;
    return (up - down) / (2.0 * step);
  };
  for (std::size_t m = 0; m < probe.layers.size(); ++m) {
    auto& layer = probe.layers[m];
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) grad.layers[m].weight(r, c) = central(layer.weight(r, c));
      grad.layers[m].bias(r) = central(layer.bias(r));
    }
  }
  return grad;
}

GradCheckReport run_gradcheck(const GradCheckConfig& config) {
  if (config.trials == 0) throw Error(ErrorCode::InvalidArgument, "gradient check needs at least one trial");
  if (!(config.tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (!(config.step > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  if (!config.architecture.empty() && config.architecture.size() < 2) {
    throw Error(ErrorCode::BadArchitecture, "architecture needs at least two sizes");
  }
  if (config.max_layers < 1 || config.max_width < 1) {
    throw Error(ErrorCode::InvalidArgument, "random architectures need max_layers and max_width >= 1");
  }
  const double abs_tol = config.abs_tolerance.value_or(config.tolerance * 1e-3);

  Rng rng(config.seed);
  GradCheckReport report;
  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    std::vector<std::size_t> arch = config.architecture;
    if (arch.empty()) {
      const std::size_t depth = 1 + rng.uniform_index(config.max_layers);
      for (std::size_t s = 0; s <= depth; ++s) arch.push_back(1 + rng.uniform_index(config.max_width));
    }
    // Weights wider than the training init exercise the saturating regime too.
    MlpModel base = init_model(arch, rng.next());
    for (auto& layer : base.layers) {
      for (Eigen::Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = rng.uniform(-1.0, 1.0);
      for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) = rng.uniform(-0.5, 0.5);
    }
    Eigen::VectorXd xi(static_cast<Eigen::Index>(arch.front()));
    Eigen::VectorXd xj(static_cast<Eigen::Index>(arch.front()));
    for (Eigen::Index k = 0; k < xi.size(); ++k) {
      xi(k) = rng.normal();
      xj(k) = rng.normal();
    }
    const double target = rng.uniform(0.0, 4.0);
    const double lambda = rng.uniform(0.0, 0.1);

    for (auto route : config.routes) {
      MlpModel model = base;
      model.normalize_output = route == GradientRoute::Normalized;
      const auto ti = forward(model, xi);
      const auto tj = forward(model, xj);
      const PairResult analytic = route == GradientRoute::ClosedForm
                                      ? pair_backward_closed_form(model, ti, tj, target, lambda)
                                      : pair_backward(model, ti, tj, target, lambda);
      const PairGradient numeric = finite_difference_gradient(model, xi, xj, target, lambda, config.step);

      const auto check = [&](double a, double n, std::size_t layer, bool is_bias, Eigen::Index r, Eigen::Index c) {
        ++report.coordinates;
        const double diff = std::abs(a - n);
        const double scale = std::max(std::abs(a), std::abs(n));
        double rel = diff <= abs_tol ? 0.0 : diff / scale;
        if (!std::isfinite(a) || !std::isfinite(n)) rel = std::numeric_limits<double>::infinity();
        report.max_abs_error = std::max(report.max_abs_error, std::isfinite(diff) ? diff : rel);
        if (!(rel < config.tolerance)) ++report.failures;
        if (rel > report.max_rel_error || report.coordinates == 1) {
          report.max_rel_error = rel;
          report.worst = {trial, route, arch, layer + 1, is_bias, static_cast<std::size_t>(r), static_cast<std::size_t>(c),
                          a, n, rel};
        }
      };
      for (std::size_t m = 0; m < model.layers.size(); ++m) {
        const auto& ga = analytic.grad.layers[m];
        const auto& gn = numeric.layers[m];
        for (Eigen::Index r = 0; r < ga.weight.rows(); ++r) {
          for (Eigen::Index c = 0; c < ga.weight.cols(); ++c) check(ga.weight(r, c), gn.weight(r, c), m, false, r, c);
          check(ga.bias(r), gn.bias(r), m, true, r, 0);
        }
      }
    }
    ++report.trials;
  }
  return report;
}

}  // namespace hraml
