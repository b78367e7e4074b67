#include "run_config.hpp"

#include <initializer_list>
#include <json.hpp>
#include <set>

#include "hraml/error.hpp"
#include "hraml/io.hpp"

namespace hraml::cli {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void schema_error(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg); }

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) schema_error(where + " must be an object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, _] : obj.items()) {
    if (!keys.contains(key)) schema_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    schema_error(where + "." + key + " has the wrong type");
  }
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) schema_error(where + "." + key + " must be a non-negative integer");
  return v.get<std::size_t>();
}

PairBudget parse_budget(const json& v, const std::string& where) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "auto") return PairBudget::automatic();
    if (s == "all") return PairBudget::all();
  } else if (v.is_number_integer() && v.get<long long>() > 0) {
    return PairBudget::exactly(v.get<std::size_t>());
  }
  schema_error(where + " must be \"auto\", \"all\" or a positive integer");
}

ordered_json budget_to_json(const PairBudget& b) {
  switch (b.kind) {
    case PairBudget::Kind::Auto: return "auto";
    case PairBudget::Kind::All: return "all";
    case PairBudget::Kind::Count: return b.count;
  }
  return "auto";
}

LabelColumns parse_label_columns(const json& v) {
  if (v.is_string()) return LabelColumns::parse(v.get<std::string>());
  if (v.is_array() && !v.empty()) {
    LabelColumns spec;
    if (v.front().is_string()) {
      spec.mode = LabelColumns::Mode::Names;
      for (const auto& e : v) {
        if (!e.is_string()) schema_error("dataset.label_columns mixes names and positions");
        spec.names.push_back(e.get<std::string>());
      }
    } else {
      spec.mode = LabelColumns::Mode::Positions;
      for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<long long>() < 0) schema_error("dataset.label_columns positions must be >= 0");
        spec.positions.push_back(e.get<std::size_t>());
      }
    }
    return spec;
  }
  schema_error("dataset.label_columns must be a string or a non-empty array");
}

std::size_t default_k(EvaluatorKind kind) {
  switch (kind) {
    case EvaluatorKind::Knn: return 5;
    case EvaluatorKind::Mlknn: return kDefaultMlknnK;
    case EvaluatorKind::Aaknn: return 10;
  }
  return 5;
}

}  // namespace

std::string_view to_string(EvaluatorKind kind) noexcept {
  switch (kind) {
    case EvaluatorKind::Knn: return "knn";
    case EvaluatorKind::Mlknn: return "mlknn";
    case EvaluatorKind::Aaknn: return "aaknn";
  }
  return "unknown";
}

bool evaluator_matches(EvaluatorKind evaluator, TaskKind kind) noexcept {
  switch (evaluator) {
    case EvaluatorKind::Knn: return kind == TaskKind::SingleLabel;
    case EvaluatorKind::Mlknn: return kind == TaskKind::MultiLabel;
    case EvaluatorKind::Aaknn: return kind == TaskKind::LabelDistribution;
  }
  return false;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    schema_error(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, "config",
                 {"dataset", "preprocess", "split", "train", "evaluator", "baseline", "repeats", "seed", "output_dir"});
  RunConfig cfg;

  if (!doc.contains("dataset")) schema_error("config needs a dataset section");
  const auto& ds = doc.at("dataset");
  reject_unknown(ds, "dataset", {"path", "format", "kind", "label_columns"});
  if (!ds.contains("path") || !ds.at("path").is_string()) schema_error("dataset.path is required");
  cfg.dataset.path = ds.at("path").get<std::string>();
  if (cfg.dataset.path.is_relative()) cfg.dataset.path = base_dir / cfg.dataset.path;
  cfg.dataset.path = std::filesystem::absolute(cfg.dataset.path).lexically_normal();
  cfg.dataset.format = get_or<std::string>(ds, "format", "csv", "dataset");
  if (cfg.dataset.format != "csv" && cfg.dataset.format != "sparse") schema_error("dataset.format must be csv or sparse");
  if (!ds.contains("kind")) schema_error("dataset.kind is required");
  cfg.dataset.kind = parse_task_kind(get_or<std::string>(ds, "kind", "", "dataset"));
  if (ds.contains("label_columns")) {
    cfg.dataset.label_columns = parse_label_columns(ds.at("label_columns"));
  } else if (cfg.dataset.format == "csv") {
    schema_error("dataset.label_columns is required for csv input");
  }

  if (doc.contains("preprocess")) {
    const auto& pre = doc.at("preprocess");
    reject_unknown(pre, "preprocess", {"standardize"});
    cfg.standardize = get_or<bool>(pre, "standardize", false, "preprocess");
  }
  if (doc.contains("split")) {
    const auto& sp = doc.at("split");
    reject_unknown(sp, "split", {"test_fraction"});
    cfg.test_fraction = get_or<double>(sp, "test_fraction", cfg.test_fraction, "split");
  }
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) schema_error("split.test_fraction must lie in (0, 1)");

  cfg.seed = doc.contains("seed") ? get_count(doc, "seed", 0, "config") : 0;
  cfg.repeats = get_count(doc, "repeats", 1, "config");
  if (cfg.repeats < 1) schema_error("repeats must be at least 1");
  cfg.output_dir = get_or<std::string>(doc, "output_dir", "out", "config");
  if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
  cfg.output_dir = std::filesystem::absolute(cfg.output_dir).lexically_normal();

  if (!doc.contains("train")) schema_error("config needs a train section");
  const auto& tr = doc.at("train");
  reject_unknown(tr, "train",
                 {"layer_sizes", "learning_rate", "max_iterations", "lambda", "lambda_per_pair", "batch_size", "pairs",
                  "mining", "relation", "target_transform", "convergence", "normalize_output", "output_activation",
                  "step_decay", "threads"});
  auto& t = cfg.train;
  try {
    t.layer_sizes = tr.at("layer_sizes").get<std::vector<std::size_t>>();
  } catch (const json::exception&) {
    schema_error("train.layer_sizes must be an array of positive integers");
  }
  t.learning_rate = get_or<double>(tr, "learning_rate", t.learning_rate, "train");
  t.max_iterations = get_count(tr, "max_iterations", t.max_iterations, "train");
  t.lambda = get_or<double>(tr, "lambda", t.lambda, "train");
  t.lambda_per_pair = get_or<bool>(tr, "lambda_per_pair", t.lambda_per_pair, "train");
  t.batch_size = get_count(tr, "batch_size", t.batch_size, "train");
  if (tr.contains("pairs")) t.pairs = parse_budget(tr.at("pairs"), "train.pairs");
  if (tr.contains("mining")) {
    const auto& mn = tr.at("mining");
    reject_unknown(mn, "train.mining", {"kind", "pool", "keep"});
    const auto kind = get_or<std::string>(mn, "kind", "random", "train.mining");
    if (kind == "random") {
      t.mining = MiningSpec::random();
    } else if (kind == "hard_topk") {
      t.mining = MiningSpec::hard_top_k(get_count(mn, "pool", 0, "train.mining"), get_count(mn, "keep", 0, "train.mining"));
    } else {
      schema_error("train.mining.kind must be random or hard_topk");
    }
  }
  t.relation = parse_relation_kind(get_or<std::string>(tr, "relation", "l1", "train"));
  if (tr.contains("target_transform")) {
    const auto& tt = tr.at("target_transform");
    reject_unknown(tt, "train.target_transform", {"kind", "max"});
    const auto kind = get_or<std::string>(tt, "kind", "identity", "train.target_transform");
    if (kind == "identity") {
      t.target_transform.kind = TargetTransformSpec::Kind::Identity;
    } else if (kind == "scale") {
      t.target_transform.kind = TargetTransformSpec::Kind::ScaleToRange;
    } else {
      schema_error("train.target_transform.kind must be identity or scale");
    }
    t.target_transform.max = get_or<double>(tt, "max", t.target_transform.max, "train.target_transform");
  }
  if (tr.contains("convergence")) {
    const auto& cv = tr.at("convergence");
    reject_unknown(cv, "train.convergence", {"window", "rel_tol"});
    t.convergence.window = get_count(cv, "window", t.convergence.window, "train.convergence");
    t.convergence.rel_tol = get_or<double>(cv, "rel_tol", t.convergence.rel_tol, "train.convergence");
  }
  t.normalize_output = get_or<bool>(tr, "normalize_output", t.normalize_output, "train");
  const auto out_act = get_or<std::string>(tr, "output_activation", "tanh", "train");
  if (out_act != "tanh" && out_act != "linear") schema_error("train.output_activation must be tanh or linear");
  t.linear_output = out_act == "linear";
  t.step_decay = get_or<bool>(tr, "step_decay", t.step_decay, "train");
  t.threads = get_count(tr, "threads", t.threads, "train");
  t.seed = cfg.seed;
  try {
    t.validate();
  } catch (const Error& e) {
    schema_error(std::string("train: ") + e.what());
  }

  if (doc.contains("evaluator")) {
    const auto& ev = doc.at("evaluator");
    reject_unknown(ev, "evaluator", {"kind", "k", "smoothing"});
    const auto kind = get_or<std::string>(ev, "kind", "", "evaluator");
    if (kind == "knn") {
      cfg.evaluator.kind = EvaluatorKind::Knn;
    } else if (kind == "mlknn") {
      cfg.evaluator.kind = EvaluatorKind::Mlknn;
    } else if (kind == "aaknn") {
      cfg.evaluator.kind = EvaluatorKind::Aaknn;
    } else {
      schema_error("evaluator.kind must be knn, mlknn or aaknn");
    }
    cfg.evaluator.k = get_count(ev, "k", default_k(cfg.evaluator.kind), "evaluator");
    cfg.evaluator.smoothing = get_or<double>(ev, "smoothing", cfg.evaluator.smoothing, "evaluator");
  } else {
    switch (cfg.dataset.kind) {
      case TaskKind::SingleLabel: cfg.evaluator.kind = EvaluatorKind::Knn; break;
      case TaskKind::MultiLabel: cfg.evaluator.kind = EvaluatorKind::Mlknn; break;
      case TaskKind::LabelDistribution: cfg.evaluator.kind = EvaluatorKind::Aaknn; break;
    }
    cfg.evaluator.k = default_k(cfg.evaluator.kind);
  }
  if (cfg.evaluator.k < 1) schema_error("evaluator.k must be at least 1");
  if (!(cfg.evaluator.smoothing > 0.0)) schema_error("evaluator.smoothing must be positive");

  if (doc.contains("baseline")) {
    const auto& bl = doc.at("baseline");
    reject_unknown(bl, "baseline", {"ridge", "project_psd", "pairs"});
    cfg.baseline.ridge = get_or<double>(bl, "ridge", cfg.baseline.ridge, "baseline");
    cfg.baseline.project_psd = get_or<bool>(bl, "project_psd", cfg.baseline.project_psd, "baseline");
    if (bl.contains("pairs")) cfg.baseline.pairs = parse_budget(bl.at("pairs"), "baseline.pairs");
  }
  if (!(cfg.baseline.ridge >= 0.0)) schema_error("baseline.ridge must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    schema_error(e.what());
  }
  return parse_run_config(text, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::string run_config_to_json(const RunConfig& cfg) {
  ordered_json doc;
  doc["dataset"] = {{"path", cfg.dataset.path.string()},
                    {"format", cfg.dataset.format},
                    {"kind", std::string(to_string(cfg.dataset.kind))},
                    {"label_columns", cfg.dataset.label_columns.to_string()}};
  doc["preprocess"] = {{"standardize", cfg.standardize}};
  doc["split"] = {{"test_fraction", cfg.test_fraction}};
  const auto& t = cfg.train;
  ordered_json mining;
  if (t.mining.kind == MiningSpec::Kind::Random) {
    mining = {{"kind", "random"}};
  } else {
    mining = {{"kind", "hard_topk"}, {"pool", t.mining.pool}, {"keep", t.mining.keep}};
  }
  doc["train"] = {
      {"layer_sizes", t.layer_sizes},
      {"learning_rate", t.learning_rate},
      {"max_iterations", t.max_iterations},
      {"lambda", t.lambda},
      {"lambda_per_pair", t.lambda_per_pair},
      {"batch_size", t.batch_size},
      {"pairs", budget_to_json(t.pairs)},
      {"mining", mining},
      {"relation", std::string(to_string(t.relation))},
      {"target_transform",
       {{"kind", t.target_transform.kind == TargetTransformSpec::Kind::Identity ? "identity" : "scale"},
        {"max", t.target_transform.max}}},
      {"convergence", {{"window", t.convergence.window}, {"rel_tol", t.convergence.rel_tol}}},
      {"normalize_output", t.normalize_output},
      {"output_activation", t.linear_output ? "linear" : "tanh"},
      {"step_decay", t.step_decay},
      {"threads", t.threads},
  };
  doc["evaluator"] = {{"kind", std::string(to_string(cfg.evaluator.kind))},
                      {"k", cfg.evaluator.k},
                      {"smoothing", cfg.evaluator.smoothing}};
  doc["baseline"] = {{"ridge", cfg.baseline.ridge},
                     {"project_psd", cfg.baseline.project_psd},
                     {"pairs", budget_to_json(cfg.baseline.pairs)}};
  doc["repeats"] = cfg.repeats;
  doc["seed"] = cfg.seed;
  doc["output_dir"] = cfg.output_dir.string();
  return doc.dump(2) + "\n";
}

}  // namespace hraml::cli
