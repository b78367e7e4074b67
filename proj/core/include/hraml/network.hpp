#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hraml {

class Dataset;

/// One affine layer; `weight` is (out x in) so the pre-activation is W h + b.
struct Layer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// Guard on the output-normalization denominator.
inline constexpr double kNormEpsilon = 1e-12;

/// tanh MLP encoder.
///
/// Every layer applies tanh, including the last one, unless `linear_output`
/// is set, in which case the final layer is affine. With `normalize_output`
/// the embedding is the final activation divided by max(norm, kNormEpsilon).
struct MlpModel {
  std::vector<Layer> layers;
  bool normalize_output = true;
  bool linear_output = false;

  std::vector<std::size_t> layer_sizes() const;
  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;

  /// Throws BadArchitecture on broken chaining or non-finite parameters.
  void validate() const;
};

struct ModelOptions {
  bool normalize_output = true;
  bool linear_output = false;
};

/// Zero biases and weights drawn i.i.d. from U[-0.2, 0.2].
MlpModel init_model(std::span<const std::size_t> layer_sizes, std::uint64_t seed, ModelOptions options = {});

inline constexpr double kInitWeightBound = 0.2;

struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre;  // pre-activation of layers 1..M
  std::vector<Eigen::VectorXd> act;  // act[0] is the input, act[m] the output of layer m
  Eigen::VectorXd embedding;
  double output_norm = 0.0;

  const Eigen::VectorXd& output() const { return act.back(); }
};

ForwardTrace forward(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Parameter-shaped accumulator used for gradients and updates.
struct PairGradient {
  std::vector<Layer> layers;

  static PairGradient zeros_like(const MlpModel& model);

  PairGradient& operator+=(const PairGradient& other);
  PairGradient& operator*=(double factor);
  bool all_finite() const;
  double max_abs() const;
};

struct PairResult {
  double loss = 0.0;       // data + regularization
  double data_loss = 0.0;  // 1/4 (D^2 - target)^2
  double reg_loss = 0.0;   // lambda * sum(||W||_F^2 + ||b||^2)
  PairGradient grad;
};

/// sum over layers of ||W||_F^2 + ||b||^2
double regularization(const MlpModel& model);

/// Loss only; no gradient work.
double pair_loss(const MlpModel& model, const ForwardTrace& ti, const ForwardTrace& tj, double target, double lambda);

/// Exact gradient of 1/4 (||e_i - e_j||^2 - target)^2 + lambda * reg, where
/// e is the (optionally normalized) embedding. Each side is backpropagated
/// separately from its embedding gradient and the two are summed.
PairResult pair_backward(const MlpModel& model, const ForwardTrace& ti, const ForwardTrace& tj, double target,
                         double lambda);

/// The paired delta recursion without a normalization layer:
///
///   delta_i^M = (D^2 - g) s'(x_i^M) (f_i - f_j),   delta_j^M = (D^2 - g) s'(x_j^M) (f_i - f_j)
///   delta^m   = s'(x^m) W^(m+1)^T delta^(m+1)
///   dJ/dW^m   = delta_i^m h_i^(m-1)^T - delta_j^m h_j^(m-1)^T,   dJ/db^m = delta_i^m - delta_j^m
///
/// plus 2 lambda W and 2 lambda b. Throws InvalidArgument when the model
/// normalizes its output, since the recursion has no term for that layer.
PairResult pair_backward_closed_form(const MlpModel& model, const ForwardTrace& ti, const ForwardTrace& tj,
                                     double target, double lambda);

/// Applies theta <- theta - step * grad.
void apply_update(MlpModel& model, const PairGradient& grad, double step);

/// Row k is the embedding of features.row(indices[k]).
Eigen::MatrixXd embed_all(const MlpModel& model, const Eigen::MatrixXd& features, std::span<const std::size_t> indices);
Eigen::MatrixXd embed_all(const MlpModel& model, const Dataset& ds, std::span<const std::size_t> indices);
Eigen::MatrixXd embed_all(const MlpModel& model, const Eigen::MatrixXd& features);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace hraml
