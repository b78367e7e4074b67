#include "hraml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hraml/error.hpp"
#include "hraml/io.hpp"
#include "hraml/random.hpp"

namespace hraml {

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "unterminated quote");
  cells.push_back(std::move(cell));
  for (auto& c : cells) c = std::string(io::trim(c));
  return cells;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_on(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(sep, start);
    parts.push_back(text.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return parts;
}

std::string quote_csv(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void check_finite(const Eigen::MatrixXd& m, ErrorCode code, const char* what) {
  if (!m.allFinite()) throw Error(code, std::string(what) + " contain NaN or Inf");
}

constexpr double kRenormalizeThreshold = 1e-12;

void validate_labels(Eigen::MatrixXd& labels, TaskKind kind) {
  check_finite(labels, ErrorCode::InvalidLabel, "labels");
  for (Eigen::Index r = 0; r < labels.rows(); ++r) {
    auto row = labels.row(r);
    switch (kind) {
      case TaskKind::SingleLabel: {
        int ones = 0;
        for (Eigen::Index c = 0; c < row.size(); ++c) {
          if (row(c) == 1.0) {
            ++ones;
          } else if (row(c) != 0.0) {
            throw Error(ErrorCode::InvalidLabel,
                        "row " + std::to_string(r) + " is not one-hot (entry " + io::format_double(row(c)) + ")");
          }
        }
        if (ones != 1) {
          throw Error(ErrorCode::InvalidLabel,
                      "row " + std::to_string(r) + " has " + std::to_string(ones) + " ones; one-hot requires exactly 1");
        }
        break;
      }
      case TaskKind::MultiLabel:
        for (Eigen::Index c = 0; c < row.size(); ++c) {
          if (row(c) != 0.0 && row(c) != 1.0) {
            throw Error(ErrorCode::InvalidLabel, "row " + std::to_string(r) + " has a non-binary label entry");
          }
        }
        break;
      case TaskKind::LabelDistribution: {
        if ((row.array() < 0.0).any()) {
          throw Error(ErrorCode::InvalidLabel, "row " + std::to_string(r) + " has a negative probability");
        }
        const double sum = row.sum();
        if (std::abs(sum - 1.0) > kDistributionSumSlack) {
          throw Error(ErrorCode::InvalidLabel,
                      "row " + std::to_string(r) + " sums to " + io::format_double(sum) + ", outside [0.9, 1.1]");
        }
        // Rows already within rounding of 1 are left alone so a reload of
        // saved data reproduces it bit for bit.
        if (std::abs(sum - 1.0) > kRenormalizeThreshold) row /= sum;
        break;
      }
    }
  }
}

}  // namespace

std::string_view to_string(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::SingleLabel: return "single_label";
    case TaskKind::MultiLabel: return "multi_label";
    case TaskKind::LabelDistribution: return "label_distribution";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "single_label") return TaskKind::SingleLabel;
  if (text == "multi_label") return TaskKind::MultiLabel;
  if (text == "label_distribution") return TaskKind::LabelDistribution;
  throw Error(ErrorCode::SchemaError, "unknown task kind '" + std::string(text) + "'");
}

Dataset Dataset::create(Eigen::MatrixXd features, Eigen::MatrixXd labels, TaskKind kind,
                        std::vector<std::string> feature_names, std::vector<std::string> label_names) {
  if (features.rows() < 2) throw Error(ErrorCode::EmptyDataset, "need at least 2 samples");
  if (features.cols() < 1) throw Error(ErrorCode::EmptyDataset, "need at least 1 feature");
  if (labels.cols() < 1) throw Error(ErrorCode::EmptyDataset, "need at least 1 label column");
  if (labels.rows() != features.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "feature and label row counts differ");
  }
  if (!feature_names.empty() && feature_names.size() != static_cast<std::size_t>(features.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "feature name count differs from feature count");
  }
  if (!label_names.empty() && label_names.size() != static_cast<std::size_t>(labels.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "label name count differs from label count");
  }
  check_finite(features, ErrorCode::ParseError, "features");
  validate_labels(labels, kind);

  Dataset ds;
  ds.features_ = std::move(features);
  ds.labels_ = std::move(labels);
  ds.kind_ = kind;
  ds.feature_names_ = std::move(feature_names);
  ds.label_names_ = std::move(label_names);
  return ds;
}

std::vector<int> Dataset::class_ids() const {
  if (kind_ != TaskKind::SingleLabel) {
    throw Error(ErrorCode::InvalidArgument, "class ids exist only for single-label data");
  }
  std::vector<int> ids(size());
  for (Eigen::Index r = 0; r < labels_.rows(); ++r) {
    Eigen::Index col = 0;
    labels_.row(r).maxCoeff(&col);
    ids[static_cast<std::size_t>(r)] = static_cast<int>(col);
  }
  return ids;
}

Dataset Dataset::with_features(Eigen::MatrixXd features) const {
  if (features.rows() != features_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "replacement features have a different sample count");
  }
  std::vector<std::string> names;
  if (features.cols() == features_.cols()) names = feature_names_;
  return create(std::move(features), labels_, kind_, std::move(names), label_names_);
}

LabelColumns LabelColumns::parse(std::string_view text) {
  text = io::trim(text);
  LabelColumns spec;
  const auto count_after = [&](std::string_view prefix) {
    auto n = io::parse_int(text.substr(prefix.size()));
    if (!n || *n < 1) throw Error(ErrorCode::SchemaError, "bad label column count in '" + std::string(text) + "'");
    return static_cast<std::size_t>(*n);
  };
  if (text.starts_with("last:")) {
    spec.mode = Mode::Last;
    spec.count = count_after("last:");
  } else if (text.starts_with("first:")) {
    spec.mode = Mode::First;
    spec.count = count_after("first:");
  } else if (text.starts_with("class:")) {
    spec.mode = Mode::ClassColumn;
    spec.names = {std::string(io::trim(text.substr(6)))};
    if (spec.names[0].empty()) throw Error(ErrorCode::SchemaError, "class: needs a column name");
  } else if (text.starts_with("#")) {
    spec.mode = Mode::Positions;
    for (auto part : split_on(text, ',')) {
      part = io::trim(part);
      if (part.starts_with("#")) part.remove_prefix(1);
      auto idx = io::parse_int(part);
      if (!idx || *idx < 0) throw Error(ErrorCode::SchemaError, "bad label column position '" + std::string(part) + "'");
      spec.positions.push_back(static_cast<std::size_t>(*idx));
    }
  } else {
    spec.mode = Mode::Names;
    for (auto part : split_on(text, ',')) {
      part = io::trim(part);
      if (part.empty()) throw Error(ErrorCode::SchemaError, "empty label column name");
      spec.names.emplace_back(part);
    }
  }
  return spec;
}

std::string LabelColumns::to_string() const {
  switch (mode) {
    case Mode::Last: return "last:" + std::to_string(count);
    case Mode::First: return "first:" + std::to_string(count);
    case Mode::ClassColumn: return "class:" + names.at(0);
    case Mode::Names: {
      std::string out;
      for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
      return out;
    }
    case Mode::Positions: {
      std::string out;
      for (std::size_t i = 0; i < positions.size(); ++i) out += (i ? ",#" : "#") + std::to_string(positions[i]);
      return out;
    }
  }
  return {};
}

Dataset parse_csv(std::string_view text, TaskKind kind, const LabelColumns& spec) {
  auto lines = split_lines(text);
  while (!lines.empty() && io::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::EmptyDataset, "file has no header row");
  const auto header = split_csv_line(lines[0]);
  const std::size_t ncols = header.size();

  std::vector<std::size_t> label_cols;
  switch (spec.mode) {
    case LabelColumns::Mode::Last:
    case LabelColumns::Mode::First:
      if (spec.count >= ncols) throw Error(ErrorCode::SchemaError, "label columns leave no feature columns");
      for (std::size_t i = 0; i < spec.count; ++i) {
        label_cols.push_back(spec.mode == LabelColumns::Mode::Last ? ncols - spec.count + i : i);
      }
      break;
    case LabelColumns::Mode::Names:
    case LabelColumns::Mode::ClassColumn:
      for (const auto& name : spec.names) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorCode::SchemaError, "label column '" + name + "' not in header");
        label_cols.push_back(static_cast<std::size_t>(it - header.begin()));
      }
      break;
    case LabelColumns::Mode::Positions:
      for (auto p : spec.positions) {
        if (p >= ncols) throw Error(ErrorCode::SchemaError, "label column position out of range");
        label_cols.push_back(p);
      }
      break;
  }
  if (std::set<std::size_t>(label_cols.begin(), label_cols.end()).size() != label_cols.size()) {
    throw Error(ErrorCode::SchemaError, "label columns repeat");
  }
  std::vector<bool> is_label(ncols, false);
  for (auto c : label_cols) is_label[c] = true;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < ncols; ++c) {
    if (!is_label[c]) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw Error(ErrorCode::SchemaError, "no feature columns remain");

  std::vector<std::vector<std::string>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (io::trim(lines[li]).empty()) continue;
    auto cells = split_csv_line(lines[li]);
    if (cells.size() != ncols) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(li + 1) + " has " + std::to_string(cells.size()) +
                                             " cells, header has " + std::to_string(ncols));
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "no data rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd features(n, static_cast<Eigen::Index>(feature_cols.size()));
  const auto cell_value = [&](std::size_t r, std::size_t c) {
    auto v = io::parse_double(rows[r][c]);
    if (!v) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(r + 2) + ", column '" + header[c] +
                                             "': cannot parse '" + rows[r][c] + "'");
    }
    return *v;
  };
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = cell_value(r, feature_cols[f]);
    }
  }
  std::vector<std::string> feature_names;
  for (auto c : feature_cols) feature_names.push_back(header[c]);

  Eigen::MatrixXd labels;
  std::vector<std::string> label_names;
  if (spec.mode == LabelColumns::Mode::ClassColumn) {
    if (kind != TaskKind::SingleLabel) {
      throw Error(ErrorCode::SchemaError, "class: label columns apply to single-label data only");
    }
    const std::size_t col = label_cols[0];
    bool all_numeric = true;
    for (const auto& row : rows) all_numeric = all_numeric && io::parse_double(row[col]).has_value();
    std::vector<std::string> classes;
    for (const auto& row : rows) classes.push_back(row[col]);
    if (all_numeric) {
      std::sort(classes.begin(), classes.end(), [](const std::string& a, const std::string& b) {
        return *io::parse_double(a) < *io::parse_double(b);
      });
    } else {
      std::sort(classes.begin(), classes.end());
    }
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::map<std::string, Eigen::Index> class_index;
    for (std::size_t i = 0; i < classes.size(); ++i) class_index[classes[i]] = static_cast<Eigen::Index>(i);
    labels = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(classes.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) labels(static_cast<Eigen::Index>(r), class_index[rows[r][col]]) = 1.0;
    label_names = std::move(classes);
  } else {
    labels.resize(n, static_cast<Eigen::Index>(label_cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t l = 0; l < label_cols.size(); ++l) {
        labels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = cell_value(r, label_cols[l]);
      }
    }
    for (auto c : label_cols) label_names.push_back(header[c]);
  }
  return Dataset::create(std::move(features), std::move(labels), kind, std::move(feature_names),
                         std::move(label_names));
}

Dataset load_csv(const std::filesystem::path& path, TaskKind kind, const LabelColumns& labels) {
  return parse_csv(io::read_file(path), kind, labels);
}

std::string to_csv(const Dataset& ds) {
  std::ostringstream out;
  const auto d = ds.dims();
  const auto L = ds.num_labels();
  for (std::size_t f = 0; f < d; ++f) {
    out << (f ? "," : "") << quote_csv(ds.feature_names().empty() ? "f" + std::to_string(f) : ds.feature_names()[f]);
  }
  for (std::size_t l = 0; l < L; ++l) {
    out << "," << quote_csv(ds.label_names().empty() ? "y" + std::to_string(l) : ds.label_names()[l]);
  }
  out << "\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t f = 0; f < d; ++f) {
      out << (f ? "," : "") << io::format_double(ds.features()(row, static_cast<Eigen::Index>(f)));
    }
    for (std::size_t l = 0; l < L; ++l) out << "," << io::format_double(ds.labels()(row, static_cast<Eigen::Index>(l)));
    out << "\n";
  }
  return out.str();
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) { io::write_file_atomic(path, to_csv(ds)); }

Dataset parse_sparse(std::string_view text, TaskKind kind) {
  struct Row {
    std::vector<std::pair<std::size_t, double>> entries;
    std::vector<double> dense_labels;
    std::vector<std::size_t> label_ids;
  };
  std::vector<Row> rows;
  std::size_t declared_d = 0;
  std::size_t declared_L = 0;
  bool have_dims = false;
  std::size_t max_feature = 0;
  std::size_t max_label = 0;
  std::size_t dense_label_len = 0;

  const auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto line = io::trim(lines[li]);
    const auto where = [&] { return "line " + std::to_string(li + 1) + ": "; };
    if (line.empty()) continue;
    if (line.starts_with("#")) {
      if (line.starts_with("#dims")) {
        std::istringstream in{std::string(line.substr(5))};
        long long d = 0, L = 0;
        if (!(in >> d >> L) || d < 1 || L < 1) throw Error(ErrorCode::ParseError, where() + "malformed #dims line");
        declared_d = static_cast<std::size_t>(d);
        declared_L = static_cast<std::size_t>(L);
        have_dims = true;
      }
      continue;
    }
    std::vector<std::string_view> tokens;
    for (auto tok : split_on(line, ' ')) {
      for (auto t : split_on(tok, '\t')) {
        if (!t.empty()) tokens.push_back(t);
      }
    }
    Row row;
    const auto label_token = tokens.at(0);
    switch (kind) {
      case TaskKind::SingleLabel: {
        auto id = io::parse_int(label_token);
        if (!id || *id < 0) throw Error(ErrorCode::ParseError, where() + "bad class id '" + std::string(label_token) + "'");
        row.label_ids.push_back(static_cast<std::size_t>(*id));
        break;
      }
      case TaskKind::MultiLabel:
        if (label_token != "-") {
          for (auto part : split_on(label_token, ',')) {
            auto id = io::parse_int(part);
            if (!id || *id < 0) throw Error(ErrorCode::ParseError, where() + "bad label id '" + std::string(part) + "'");
            row.label_ids.push_back(static_cast<std::size_t>(*id));
          }
        }
        break;
      case TaskKind::LabelDistribution:
        for (auto part : split_on(label_token, ',')) {
          auto v = io::parse_double(part);
          if (!v) throw Error(ErrorCode::ParseError, where() + "bad probability '" + std::string(part) + "'");
          row.dense_labels.push_back(*v);
        }
        if (dense_label_len != 0 && row.dense_labels.size() != dense_label_len) {
          throw Error(ErrorCode::ParseError, where() + "label distribution length changes");
        }
        dense_label_len = row.dense_labels.size();
        break;
    }
    for (auto id : row.label_ids) max_label = std::max(max_label, id + 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw Error(ErrorCode::ParseError, where() + "expected IDX:VAL, got '" + std::string(tokens[t]) + "'");
      }
      auto idx = io::parse_int(tokens[t].substr(0, colon));
      auto val = io::parse_double(tokens[t].substr(colon + 1));
      if (!idx || *idx < 1 || !val) {
        throw Error(ErrorCode::ParseError, where() + "malformed entry '" + std::string(tokens[t]) + "'");
      }
      row.entries.emplace_back(static_cast<std::size_t>(*idx - 1), *val);
      max_feature = std::max(max_feature, static_cast<std::size_t>(*idx));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "no samples");

  std::size_t d = have_dims ? declared_d : max_feature;
  std::size_t L = have_dims ? declared_L : (kind == TaskKind::LabelDistribution ? dense_label_len : max_label);
  if (max_feature > d) throw Error(ErrorCode::ParseError, "feature index exceeds declared dimension");
  if (kind == TaskKind::LabelDistribution ? dense_label_len != L : max_label > L) {
    throw Error(ErrorCode::ParseError, "label ids exceed declared label count");
  }
  if (d == 0) throw Error(ErrorCode::EmptyDataset, "no features");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d));
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(L));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    for (auto [idx, val] : row.entries) features(r, static_cast<Eigen::Index>(idx)) = val;
    for (auto id : row.label_ids) {
      if (labels(r, static_cast<Eigen::Index>(id)) == 1.0) {
        throw Error(ErrorCode::InvalidLabel, "sample " + std::to_string(r) + " repeats a label id");
      }
      labels(r, static_cast<Eigen::Index>(id)) = 1.0;
    }
    for (std::size_t l = 0; l < row.dense_labels.size(); ++l) labels(r, static_cast<Eigen::Index>(l)) = row.dense_labels[l];
  }
  return Dataset::create(std::move(features), std::move(labels), kind);
}

Dataset load_sparse(const std::filesystem::path& path, TaskKind kind) { return parse_sparse(io::read_file(path), kind); }

std::string to_sparse(const Dataset& ds) {
  std::ostringstream out;
  out << "#dims " << ds.dims() << " " << ds.num_labels() << "\n";
  const auto& X = ds.features();
  const auto& Y = ds.labels();
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    switch (ds.kind()) {
      case TaskKind::SingleLabel: {
        Eigen::Index col = 0;
        Y.row(r).maxCoeff(&col);
        out << col;
        break;
      }
      case TaskKind::MultiLabel: {
        bool any = false;
        for (Eigen::Index l = 0; l < Y.cols(); ++l) {
          if (Y(r, l) == 1.0) {
            out << (any ? "," : "") << l;
            any = true;
          }
        }
        if (!any) out << "-";
        break;
      }
      case TaskKind::LabelDistribution:
        for (Eigen::Index l = 0; l < Y.cols(); ++l) out << (l ? "," : "") << io::format_double(Y(r, l));
        break;
    }
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
      // Signed zero must survive the round trip, so only +0.0 is elided.
      if (X(r, f) == 0.0 && !std::signbit(X(r, f))) continue;
      out << " " << (f + 1) << ":" << io::format_double(X(r, f));
    }
    out << "\n";
  }
  return out.str();
}

void save_sparse(const Dataset& ds, const std::filesystem::path& path) { io::write_file_atomic(path, to_sparse(ds)); }

Eigen::MatrixXd FeatureTransform::apply(const Eigen::MatrixXd& features) const {
  if (features.cols() != mean.size()) throw Error(ErrorCode::DimensionMismatch, "transform fitted on another width");
  Eigen::MatrixXd out(features.rows(), features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    if (scale(c) == 0.0) {
      out.col(c).setZero();
    } else {
      out.col(c) = (features.col(c).array() - mean(c)) / scale(c);
    }
  }
  return out;
}

std::pair<Dataset, FeatureTransform> standardize_features(const Dataset& ds) {
  const auto& X = ds.features();
  const double n = static_cast<double>(X.rows());
  FeatureTransform t;
  t.mean = X.colwise().mean().transpose();
  t.scale.resize(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - t.mean(c)).square().sum() / n;
    const double sd = std::sqrt(var);
    // Column sums of a constant column can drift by an ulp, leaving a tiny
    // nonzero deviation; treat anything at rounding level as constant.
    const double floor = 1e-12 * std::max(1.0, std::abs(t.mean(c)));
    t.scale(c) = sd <= floor ? 0.0 : sd;
  }
  return {ds.with_features(t.apply(X)), t};
}

Split split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::DegenerateSplit, "test fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n_test >= n) {
    throw Error(ErrorCode::DegenerateSplit, "fraction " + io::format_double(test_fraction) + " of " +
                                                std::to_string(n) + " samples leaves an empty side");
  }
  Rng rng(seed);
  Split s;

  bool stratify = ds.kind() == TaskKind::SingleLabel;
  std::vector<std::vector<std::size_t>> by_class;
  if (stratify) {
    const auto ids = ds.class_ids();
    by_class.resize(ds.num_labels());
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ids[i])].push_back(i);
    std::erase_if(by_class, [](const auto& members) { return members.empty(); });
    for (const auto& members : by_class) stratify = stratify && members.size() >= 2;
  }

  if (!stratify) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  } else {
    // Largest-remainder apportionment keeps the total at exactly n_test.
    const std::size_t k = by_class.size();
    std::vector<std::size_t> quota(k);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double exact = static_cast<double>(n_test) * static_cast<double>(by_class[c].size()) / static_cast<double>(n);
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      assigned += quota[c];
      remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n_test; ++r) {
      ++quota[remainders[r % k].second];
      ++assigned;
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto members = by_class[c];
      rng.shuffle(members);
      const std::size_t q = std::min(quota[c], members.size());
      s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q));
      s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(q), members.end());
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  validate_split(s, n);
  return s;
}

void validate_split(const Split& s, std::size_t n) {
  if (s.train.empty() || s.test.empty()) throw Error(ErrorCode::DegenerateSplit, "split has an empty side");
  std::vector<bool> seen(n, false);
  for (const auto* side : {&s.train, &s.test}) {
    for (auto i : *side) {
      if (i >= n) throw Error(ErrorCode::DegenerateSplit, "split index out of range");
      if (seen[i]) throw Error(ErrorCode::DegenerateSplit, "split index repeats");
      seen[i] = true;
    }
  }
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= static_cast<std::size_t>(m.rows())) throw Error(ErrorCode::DimensionMismatch, "row index out of range");
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

}  // namespace hraml
