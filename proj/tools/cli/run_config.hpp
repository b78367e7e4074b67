#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "hraml/dataset.hpp"
#include "hraml/evaluators.hpp"
#include "hraml/trainer.hpp"

namespace hraml::cli {

struct DatasetSpec {
  std::filesystem::path path;
  std::string format = "csv";  // csv | sparse
  TaskKind kind = TaskKind::SingleLabel;
  LabelColumns label_columns;
};

enum class EvaluatorKind { Knn, Mlknn, Aaknn };

std::string_view to_string(EvaluatorKind kind) noexcept;

struct EvaluatorSpec {
  EvaluatorKind kind = EvaluatorKind::Knn;
  std::size_t k = 5;
  double smoothing = kDefaultMlknnSmoothing;
};

struct BaselineSpec {
  double ridge = 1e-3;
  bool project_psd = true;
  PairBudget pairs;
};

/// Everything one CLI run needs; parsed from a JSON document.
struct RunConfig {
  DatasetSpec dataset;
  bool standardize = false;
  double test_fraction = 0.3;
  TrainConfig train;
  EvaluatorSpec evaluator;
  BaselineSpec baseline;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
};

/// Relative dataset and output paths resolve against `base_dir` (the config
/// file's directory). Throws SchemaError on unknown keys or malformed values.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// The effective configuration with defaults filled in; parsing it back
/// yields an identical RunConfig.
std::string run_config_to_json(const RunConfig& config);

/// The evaluator that matches each task kind.
bool evaluator_matches(EvaluatorKind evaluator, TaskKind kind) noexcept;

}  // namespace hraml::cli
