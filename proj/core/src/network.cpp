#include "hraml/network.hpp"

#include <cmath>
#include <json.hpp>

#include "hraml/dataset.hpp"
#include "hraml/error.hpp"
#include "hraml/io.hpp"
#include "hraml/random.hpp"

namespace hraml {

namespace {

using json = nlohmann::json;

bool is_linear_layer(const MlpModel& model, std::size_t m) {
  return model.linear_output && m + 1 == model.layers.size();
}

// Derivative of the layer activation, expressed through its output.
Eigen::VectorXd activation_slope(const MlpModel& model, std::size_t m, const Eigen::VectorXd& out) {
  if (is_linear_layer(model, m)) return Eigen::VectorXd::Ones(out.size());
  return (1.0 - out.array().square()).matrix();
}

void check_trace(const MlpModel& model, const ForwardTrace& t) {
  const auto sizes = model.layer_sizes();
  if (t.act.size() != sizes.size() || t.pre.size() + 1 != sizes.size()) {
    throw Error(ErrorCode::TraceMismatch, "trace depth differs from model depth");
  }
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    if (static_cast<std::size_t>(t.act[m].size()) != sizes[m]) {
      throw Error(ErrorCode::TraceMismatch, "trace layer " + std::to_string(m) + " has the wrong width");
    }
  }
  if (static_cast<std::size_t>(t.embedding.size()) != sizes.back()) {
    throw Error(ErrorCode::TraceMismatch, "trace embedding has the wrong width");
  }
}

void add_regularization(const MlpModel& model, double lambda, PairResult& result) {
  result.reg_loss = lambda * regularization(model);
  result.loss = result.data_loss + result.reg_loss;
  if (lambda == 0.0) return;
  for (std::size_t m = 0; m < model.layers.size(); ++m) {
    result.grad.layers[m].weight += 2.0 * lambda * model.layers[m].weight;
    result.grad.layers[m].bias += 2.0 * lambda * model.layers[m].bias;
  }
}

// Standard single-sample backprop from the gradient at the final activation.
void backprop_sample(const MlpModel& model, const ForwardTrace& t, Eigen::VectorXd upstream, PairGradient& grad) {
  for (std::size_t m = model.layers.size(); m-- > 0;) {
    const Eigen::VectorXd delta = upstream.cwiseProduct(activation_slope(model, m, t.act[m + 1]));
    grad.layers[m].weight.noalias() += delta * t.act[m].transpose();
    grad.layers[m].bias += delta;
    if (m > 0) upstream = model.layers[m].weight.transpose() * delta;
  }
}

// d(embedding)/d(output) applied to an embedding gradient.
Eigen::VectorXd through_normalization(const ForwardTrace& t, const Eigen::VectorXd& grad_embedding) {
  if (t.output_norm <= kNormEpsilon) return Eigen::VectorXd::Zero(grad_embedding.size());
  const Eigen::VectorXd& e = t.embedding;
  return (grad_embedding - e * e.dot(grad_embedding)) / t.output_norm;
}

}  // namespace

std::vector<std::size_t> MlpModel::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(static_cast<std::size_t>(layers.front().weight.cols()));
  for (const auto& layer : layers) sizes.push_back(static_cast<std::size_t>(layer.weight.rows()));
  return sizes;
}

std::size_t MlpModel::input_size() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MlpModel::output_size() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers) count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return count;
}

void MlpModel::validate() const {
  if (layers.empty()) throw Error(ErrorCode::BadArchitecture, "model has no layers");
  for (std::size_t m = 0; m < layers.size(); ++m) {
    const auto& layer = layers[m];
    if (layer.weight.rows() < 1 || layer.weight.cols() < 1) {
      throw Error(ErrorCode::BadArchitecture, "layer " + std::to_string(m + 1) + " has an empty weight matrix");
    }
    if (layer.bias.size() != layer.weight.rows()) {
      throw Error(ErrorCode::BadArchitecture, "layer " + std::to_string(m + 1) + " bias length differs from its width");
    }
    if (m > 0 && layer.weight.cols() != layers[m - 1].weight.rows()) {
      throw Error(ErrorCode::BadArchitecture, "layer " + std::to_string(m + 1) + " input does not chain");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw Error(ErrorCode::BadArchitecture, "layer " + std::to_string(m + 1) + " has non-finite parameters");
    }
  }
}

MlpModel init_model(std::span<const std::size_t> layer_sizes, std::uint64_t seed, ModelOptions options) {
  if (layer_sizes.size() < 2) throw Error(ErrorCode::BadArchitecture, "need at least input and output sizes");
  for (auto s : layer_sizes) {
    if (s < 1) throw Error(ErrorCode::BadArchitecture, "layer sizes must be positive");
  }
  Rng rng(seed);
  MlpModel model;
  model.normalize_output = options.normalize_output;
  model.linear_output = options.linear_output;
  for (std::size_t m = 1; m < layer_sizes.size(); ++m) {
    const auto out = static_cast<Eigen::Index>(layer_sizes[m]);
    const auto in = static_cast<Eigen::Index>(layer_sizes[m - 1]);
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-kInitWeightBound, kInitWeightBound);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

ForwardTrace forward(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (model.layers.empty()) throw Error(ErrorCode::BadArchitecture, "model has no layers");
  if (static_cast<std::size_t>(x.size()) != model.input_size()) {
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) + " features, model expects " +
                                                  std::to_string(model.input_size()));
  }
  ForwardTrace t;
  t.pre.reserve(model.layers.size());
  t.act.reserve(model.layers.size() + 1);
  t.act.emplace_back(x);
  for (std::size_t m = 0; m < model.layers.size(); ++m) {
    const auto& layer = model.layers[m];
    Eigen::VectorXd z = layer.weight * t.act.back() + layer.bias;
    Eigen::VectorXd h = is_linear_layer(model, m) ? z : Eigen::VectorXd(z.array().tanh());
    t.pre.push_back(std::move(z));
    t.act.push_back(std::move(h));
  }
  t.output_norm = t.act.back().norm();
  if (model.normalize_output) {
    t.embedding = t.act.back() / std::max(t.output_norm, kNormEpsilon);
  } else {
    t.embedding = t.act.back();
  }
  return t;
}

PairGradient PairGradient::zeros_like(const MlpModel& model) {
  PairGradient g;
  g.layers.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

PairGradient& PairGradient::operator+=(const PairGradient& other) {
  if (other.layers.size() != layers.size()) throw Error(ErrorCode::DimensionMismatch, "gradient depth differs");
  for (std::size_t m = 0; m < layers.size(); ++m) {
    layers[m].weight += other.layers[m].weight;
    layers[m].bias += other.layers[m].bias;
  }
  return *this;
}

PairGradient& PairGradient::operator*=(double factor) {
  for (auto& layer : layers) {
    layer.weight *= factor;
    layer.bias *= factor;
  }
  return *this;
}

bool PairGradient::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

double PairGradient::max_abs() const {
  double best = 0.0;
  for (const auto& layer : layers) {
    if (layer.weight.size() > 0) best = std::max(best, layer.weight.cwiseAbs().maxCoeff());
    if (layer.bias.size() > 0) best = std::max(best, layer.bias.cwiseAbs().maxCoeff());
  }
  return best;
}

double regularization(const MlpModel& model) {
  double sum = 0.0;
  for (const auto& layer : model.layers) sum += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  return sum;
}

double pair_loss(const MlpModel& model, const ForwardTrace& ti, const ForwardTrace& tj, double target, double lambda) {
  check_trace(model, ti);
  check_trace(model, tj);
  const double residual = (ti.embedding - tj.embedding).squaredNorm() - target;
  return 0.25 * residual * residual + (lambda == 0.0 ? 0.0 : lambda * regularization(model));
}

PairResult pair_backward(const MlpModel& model, const ForwardTrace& ti, const ForwardTrace& tj, double target,
                         double lambda) {
  check_trace(model, ti);
  check_trace(model, tj);
  PairResult result;
  result.grad = PairGradient::zeros_like(model);

  const Eigen::VectorXd diff = ti.embedding - tj.embedding;
  const double residual = diff.squaredNorm() - target;
  result.data_loss = 0.25 * residual * residual;

  // dJ/de_i = (D^2 - g)(e_i - e_j); dJ/de_j is its negation.
  const Eigen::VectorXd grad_ei = residual * diff;
  const Eigen::VectorXd grad_ej = -grad_ei;
  if (model.normalize_output) {
    backprop_sample(model, ti, through_normalization(ti, grad_ei), result.grad);
    backprop_sample(model, tj, through_normalization(tj, grad_ej), result.grad);
  } else {
    backprop_sample(model, ti, grad_ei, result.grad);
    backprop_sample(model, tj, grad_ej, result.grad);
  }
  add_regularization(model, lambda, result);
  return result;
}

PairResult pair_backward_closed_form(const MlpModel& model, const ForwardTrace& ti, const ForwardTrace& tj,
                                     double target, double lambda) {
  if (model.normalize_output) {
    throw Error(ErrorCode::InvalidArgument, "the closed-form recursion has no output normalization term");
  }
  check_trace(model, ti);
  check_trace(model, tj);
  PairResult result;
  result.grad = PairGradient::zeros_like(model);

  const Eigen::VectorXd f_diff = ti.output() - tj.output();
  const double residual = f_diff.squaredNorm() - target;
  result.data_loss = 0.25 * residual * residual;

  const std::size_t top = model.layers.size() - 1;
  Eigen::VectorXd delta_i = residual * activation_slope(model, top, ti.act[top + 1]).cwiseProduct(f_diff);
  Eigen::VectorXd delta_j = residual * activation_slope(model, top, tj.act[top + 1]).cwiseProduct(f_diff);
  for (std::size_t m = top + 1; m-- > 0;) {
    result.grad.layers[m].weight = delta_i * ti.act[m].transpose() - delta_j * tj.act[m].transpose();
    result.grad.layers[m].bias = delta_i - delta_j;
    if (m == 0) break;
    const auto& w_above = model.layers[m].weight;
    delta_i = activation_slope(model, m - 1, ti.act[m]).cwiseProduct(w_above.transpose() * delta_i);
    delta_j = activation_slope(model, m - 1, tj.act[m]).cwiseProduct(w_above.transpose() * delta_j);
  }
  add_regularization(model, lambda, result);
  return result;
}

void apply_update(MlpModel& model, const PairGradient& grad, double step) {
  if (grad.layers.size() != model.layers.size()) throw Error(ErrorCode::DimensionMismatch, "gradient depth differs");
  for (std::size_t m = 0; m < model.layers.size(); ++m) {
    model.layers[m].weight -= step * grad.layers[m].weight;
    model.layers[m].bias -= step * grad.layers[m].bias;
  }
}

Eigen::MatrixXd embed_all(const MlpModel& model, const Eigen::MatrixXd& features, std::span<const std::size_t> indices) {
  if (static_cast<std::size_t>(features.cols()) != model.input_size()) {
    throw Error(ErrorCode::DimensionMismatch, "features have " + std::to_string(features.cols()) +
                                                  " columns, model expects " + std::to_string(model.input_size()));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), static_cast<Eigen::Index>(model.output_size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= static_cast<std::size_t>(features.rows())) {
      throw Error(ErrorCode::DimensionMismatch, "sample index out of range");
    }
    const Eigen::VectorXd x = features.row(static_cast<Eigen::Index>(indices[k])).transpose();
    out.row(static_cast<Eigen::Index>(k)) = forward(model, x).embedding.transpose();
  }
  return out;
}

Eigen::MatrixXd embed_all(const MlpModel& model, const Dataset& ds, std::span<const std::size_t> indices) {
  return embed_all(model, ds.features(), indices);
}

Eigen::MatrixXd embed_all(const MlpModel& model, const Eigen::MatrixXd& features) {
  std::vector<std::size_t> all(static_cast<std::size_t>(features.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return embed_all(model, features, all);
}

std::string model_to_json(const MlpModel& model) {
  json doc;
  doc["layer_sizes"] = model.layer_sizes();
  doc["normalize_output"] = model.normalize_output;
  doc["activation"] = "tanh";
  doc["output_activation"] = model.linear_output ? "linear" : "tanh";
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json w = json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) row.push_back(layer.weight(r, c));
      w.push_back(std::move(row));
    }
    json b = json::array();
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) b.push_back(layer.bias(r));
    layers.push_back({{"w", std::move(w)}, {"b", std::move(b)}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1) + "\n";
}

MlpModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    MlpModel model;
    const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
    model.normalize_output = doc.at("normalize_output").get<bool>();
    if (doc.value("activation", std::string("tanh")) != "tanh") {
      throw Error(ErrorCode::SchemaError, "only tanh activations are supported");
    }
    const auto out_act = doc.value("output_activation", std::string("tanh"));
    if (out_act != "tanh" && out_act != "linear") throw Error(ErrorCode::SchemaError, "unknown output activation");
    model.linear_output = out_act == "linear";
    const auto& layers = doc.at("layers");
    if (sizes.size() < 2 || layers.size() + 1 != sizes.size()) {
      throw Error(ErrorCode::SchemaError, "layer records do not match layer_sizes");
    }
    for (std::size_t m = 0; m < layers.size(); ++m) {
      const auto rows = static_cast<Eigen::Index>(sizes[m + 1]);
      const auto cols = static_cast<Eigen::Index>(sizes[m]);
      const auto& w = layers[m].at("w");
      const auto& b = layers[m].at("b");
      if (w.size() != sizes[m + 1] || b.size() != sizes[m + 1]) {
        throw Error(ErrorCode::SchemaError, "layer " + std::to_string(m + 1) + " has the wrong shape");
      }
      Layer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = w[static_cast<std::size_t>(r)];
        if (row.size() != sizes[m]) throw Error(ErrorCode::SchemaError, "weight row has the wrong length");
        for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        layer.bias(r) = b[static_cast<std::size_t>(r)].get<double>();
      }
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed model file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    throw Error(ErrorCode::SchemaError, e.what());
  }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, model_to_json(model));
}

MlpModel load_model(const std::filesystem::path& path) { return model_from_json(io::read_file(path)); }

}  // namespace hraml
