#include "hraml/metrics.hpp"

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "hraml/error.hpp"
#include "hraml/io.hpp"

namespace hraml {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " shapes differ");
  }
}

void require_distributions(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() < 0.0).any() || !m.row(r).allFinite() || std::abs(m.row(r).sum() - 1.0) > 1e-6) {
      throw Error(ErrorCode::NotADistribution, std::string(what) + " row " + std::to_string(r) + " is not a distribution");
    }
  }
}

}  // namespace

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "prediction and truth lengths differ");
  if (predicted.empty()) throw Error(ErrorCode::LengthMismatch, "accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

MultilabelMetrics multilabel_metrics(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& predicted,
                                     const Eigen::MatrixXd& truth) {
  require_same_shape(scores, truth, "score and truth");
  require_same_shape(predicted, truth, "prediction and truth");
  const Eigen::Index n = truth.rows();
  const Eigen::Index L = truth.cols();
  if (n < 1) throw Error(ErrorCode::NoValidSamples, "no samples");
  if (L < 2) throw Error(ErrorCode::ShapeMismatch, "ranking metrics need at least 2 labels");

  MultilabelMetrics out;
  std::size_t mismatches = 0;
  for (Eigen::Index k = 0; k < truth.size(); ++k) mismatches += predicted.data()[k] != truth.data()[k] ? 1 : 0;
  out.hamming_loss = static_cast<double>(mismatches) / static_cast<double>(n * L);

  std::size_t valid = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = scores.row(i);
    const auto y = truth.row(i);
    const auto relevant = static_cast<Eigen::Index>(y.sum());
    if (relevant == 0 || relevant == L) {
      ++out.excluded;
      continue;
    }
    ++valid;

    double misordered = 0.0;
    for (Eigen::Index a = 0; a < L; ++a) {
      if (y(a) != 1.0) continue;
      for (Eigen::Index b = 0; b < L; ++b) {
        if (y(b) == 1.0) continue;
        if (s(a) < s(b)) {
          misordered += 1.0;
        } else if (s(a) == s(b)) {
          misordered += 0.5;
        }
      }
    }
    out.ranking_loss += misordered / static_cast<double>(relevant * (L - relevant));

    // Labels tied for the top score share the error equally.
    const double top = s.maxCoeff();
    double top_count = 0.0;
    double top_irrelevant = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) {
      if (s(l) != top) continue;
      top_count += 1.0;
      top_irrelevant += y(l) == 1.0 ? 0.0 : 1.0;
    }
    out.one_error += top_irrelevant / top_count;

    std::vector<Eigen::Index> rank(static_cast<std::size_t>(L));
    for (Eigen::Index l = 0; l < L; ++l) rank[static_cast<std::size_t>(l)] = (s.array() >= s(l)).count();

    Eigen::Index worst = 0;
    double precision_sum = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) {
      if (y(l) != 1.0) continue;
      const auto rl = rank[static_cast<std::size_t>(l)];
      worst = std::max(worst, rl);
      Eigen::Index above = 0;
      for (Eigen::Index m = 0; m < L; ++m) {
        if (y(m) == 1.0 && rank[static_cast<std::size_t>(m)] <= rl) ++above;
      }
      precision_sum += static_cast<double>(above) / static_cast<double>(rl);
    }
    out.coverage += static_cast<double>(worst - 1);
    out.average_precision += precision_sum / static_cast<double>(relevant);
  }
  if (valid == 0) throw Error(ErrorCode::NoValidSamples, "every sample has no or all labels relevant");
  const double v = static_cast<double>(valid);
  out.ranking_loss /= v;
  out.one_error /= v;
  out.coverage /= v;
  out.average_precision /= v;
  return out;
}

LdlMetrics ldl_metrics(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& truth) {
  require_same_shape(predicted, truth, "prediction and truth");
  if (truth.rows() < 1) throw Error(ErrorCode::ShapeMismatch, "no samples");
  require_distributions(predicted, "prediction");
  require_distributions(truth, "truth");

  LdlMetrics out;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    const Eigen::ArrayXd d = truth.row(i).transpose().array();
    const Eigen::ArrayXd p = predicted.row(i).transpose().array();
    const Eigen::ArrayXd diff = (d - p).abs();
    const Eigen::ArrayXd sum = d + p;
    double clark = 0.0;
    double canberra = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (sum(j) == 0.0) continue;
      clark += (diff(j) / sum(j)) * (diff(j) / sum(j));
      canberra += diff(j) / sum(j);
    }
    out.chebyshev += diff.maxCoeff();
    out.clark += std::sqrt(clark);
    out.canberra += canberra;
    out.cosine += (d * p).sum() / (std::sqrt(d.square().sum()) * std::sqrt(p.square().sum()));
    out.intersection += d.min(p).sum();
  }
  const double n = static_cast<double>(truth.rows());
  out.chebyshev /= n;
  out.clark /= n;
  out.canberra /= n;
  out.cosine /= n;
  out.intersection /= n;
  return out;
}

std::string_view to_string(Orientation o) noexcept {
  return o == Orientation::HigherBetter ? "higher_better" : "lower_better";
}

std::optional<Orientation> canonical_orientation(std::string_view metric) {
  static const std::map<std::string_view, Orientation> table{
      {"accuracy", Orientation::HigherBetter},     {"hamming_loss", Orientation::LowerBetter},
      {"ranking_loss", Orientation::LowerBetter},  {"one_error", Orientation::LowerBetter},
      {"coverage", Orientation::LowerBetter},      {"average_precision", Orientation::HigherBetter},
      {"chebyshev", Orientation::LowerBetter},     {"clark", Orientation::LowerBetter},
      {"canberra", Orientation::LowerBetter},      {"cosine", Orientation::HigherBetter},
      {"intersection", Orientation::HigherBetter},
  };
  auto it = table.find(metric);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

double MetricSeries::mean() const {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double MetricSeries::stddev() const {
  if (values.size() < 2) return 0.0;
  const double mu = mean();
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

void EvalReport::record(const std::string& name, double value, std::optional<Orientation> orientation) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "metric '" + name + "' is not finite");
  const auto canonical = canonical_orientation(name);
  if (canonical && orientation && *canonical != *orientation) {
    throw Error(ErrorCode::InvalidArgument, "metric '" + name + "' has a fixed orientation");
  }
  if (!canonical && !orientation) throw Error(ErrorCode::InvalidArgument, "metric '" + name + "' needs an orientation");
  auto& series = metrics_[name];
  series.orientation = canonical ? *canonical : *orientation;
  series.values.push_back(value);
}

void EvalReport::record(const MultilabelMetrics& m) {
  record("hamming_loss", m.hamming_loss);
  record("ranking_loss", m.ranking_loss);
  record("one_error", m.one_error);
  record("coverage", m.coverage);
  record("average_precision", m.average_precision);
  notes_["excluded_samples"] += static_cast<double>(m.excluded);
}

void EvalReport::record(const LdlMetrics& m) {
  record("chebyshev", m.chebyshev);
  record("clark", m.clark);
  record("canberra", m.canberra);
  record("cosine", m.cosine);
  record("intersection", m.intersection);
}

const MetricSeries& EvalReport::at(const std::string& name) const {
  auto it = metrics_.find(name);
  if (it == metrics_.end()) throw Error(ErrorCode::InvalidArgument, "no metric '" + name + "' in report");
  return it->second;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["dataset"] = dataset;
  doc["model"] = model;
  if (timestamp) doc["timestamp"] = *timestamp;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [name, series] : metrics_) {
    metrics[name] = {{"mean", series.mean()},
                     {"std", series.stddev()},
                     {"runs", series.values.size()},
                     {"orientation", std::string(to_string(series.orientation))},
                     {"values", series.values}};
  }
  doc["metrics"] = std::move(metrics);
  doc["notes"] = notes_;
  return doc.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream header;
  std::ostringstream row;
  header << "dataset,model";
  row << dataset << "," << model;
  for (const auto& [name, series] : metrics_) {
    header << "," << name << "_mean," << name << "_std";
    row << "," << io::format_double(series.mean()) << "," << io::format_double(series.stddev());
  }
  return header.str() + "\n" + row.str() + "\n";
}

}  // namespace hraml
