#include <gtest/gtest.h>

#include <cstdlib>
#include <json.hpp>
#include <set>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "fixtures.hpp"
#include "hraml/dataset.hpp"
#include "hraml/error.hpp"
#include "hraml/io.hpp"
#include "oracles.hpp"

namespace hraml::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

/// Temp workspace holding a dataset and a config that points at it.
class Workspace {
 public:
  Workspace(TaskKind kind, std::size_t n, std::size_t d, std::size_t L, std::uint64_t seed)
      : dir_("cli"), dataset_(make_dataset(kind, n, d, L, seed)) {
    save_csv(dataset_, dir_ / "data.csv");
    config_ = {{"dataset", {{"path", "data.csv"}, {"kind", std::string(to_string(kind))}, {"label_columns", "last:" + std::to_string(L)}}},
               {"train", {{"layer_sizes", {d, 6, 3}}, {"max_iterations", 300}, {"learning_rate", 0.05}}},
               {"seed", 5},
               {"output_dir", "out"}};
  }

  static Dataset make_dataset(TaskKind kind, std::size_t n, std::size_t d, std::size_t L, std::uint64_t seed) {
    Rng rng(seed);
    return fixtures::random_dataset(kind, n, d, L, rng);
  }

  json& config() { return config_; }
  const Dataset& dataset() const { return dataset_; }
  fs::path path(const std::string& name) const { return dir_ / name; }

  /// Writes the config and returns its path.
  std::string write_config(const std::string& name = "config.json") const {
    io::write_file_atomic(dir_ / name, config_.dump(2));
    return (dir_ / name).string();
  }

  std::set<std::string> listing() const {
    std::set<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir_.path())) files.insert(fs::relative(e.path(), dir_.path()).string());
    return files;
  }

 private:
  fixtures::TempDir dir_;
  Dataset dataset_;
  json config_;
};

json read_json(const fs::path& p) { return json::parse(io::read_file(p)); }

TEST(Cli, TrainWritesArtifacts) {
  Workspace ws(TaskKind::SingleLabel, 40, 3, 3, 1);
  const auto cfg = ws.write_config();
  const auto r = invoke({"train", "--config", cfg});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* name : {"model.json", "trainlog.csv", "summary.json", "timing.json", "config.effective.json"}) {
    EXPECT_TRUE(fs::exists(ws.path("out") / name)) << name;
  }
  const auto summary = read_json(ws.path("out/summary.json"));
  EXPECT_EQ(summary.at("steps"), 300);
  EXPECT_EQ(summary.at("seed"), 5);
  EXPECT_FALSE(summary.contains("wall_seconds"));
  EXPECT_TRUE(read_json(ws.path("out/timing.json")).contains("wall_seconds"));
  const auto log = io::read_file(ws.path("out/trainlog.csv"));
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 301);
}

TEST(Cli, TrainIsDeterministicAndReplayable) {
  Workspace ws(TaskKind::MultiLabel, 40, 3, 4, 2);
  const auto cfg = ws.write_config();
  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", ws.path("a").string()}).code, kExitOk);
  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", ws.path("b").string()}).code, kExitOk);
  const auto a = io::read_file(ws.path("a/model.json"));
  EXPECT_EQ(a, io::read_file(ws.path("b/model.json")));
  EXPECT_EQ(io::read_file(ws.path("a/summary.json")), io::read_file(ws.path("b/summary.json")));

  const auto effective = ws.path("a/config.effective.json").string();
  ASSERT_EQ(invoke({"train", "--config", effective, "--out", ws.path("c").string()}).code, kExitOk);
  EXPECT_EQ(a, io::read_file(ws.path("c/model.json")));
  auto replayed = read_json(ws.path("c/config.effective.json"));
  auto original = read_json(effective);
  EXPECT_EQ(replayed.at("output_dir"), ws.path("c").string());
  replayed.erase("output_dir");
  original.erase("output_dir");
  EXPECT_EQ(replayed, original);

  ASSERT_EQ(invoke({"train", "--config", cfg, "--out", ws.path("d").string(), "--seed", "6"}).code, kExitOk);
  EXPECT_NE(a, io::read_file(ws.path("d/model.json")));
}

TEST(Cli, OutputDirectoryPrecedence) {
  Workspace ws(TaskKind::SingleLabel, 30, 2, 2, 3);
  const auto cfg = ws.write_config();
  const auto env = ws.path("from_env").string();
  ::setenv(kOutDirEnv, env.c_str(), 1);
  const auto via_env = invoke({"pairs", "--config", cfg});
  const auto via_flag = invoke({"pairs", "--config", cfg, "--out", ws.path("from_flag").string()});
  ::unsetenv(kOutDirEnv);
  ASSERT_EQ(via_env.code, kExitOk) << via_env.err;
  ASSERT_EQ(via_flag.code, kExitOk) << via_flag.err;
  EXPECT_TRUE(fs::exists(ws.path("from_env/pairs.csv")));
  EXPECT_TRUE(fs::exists(ws.path("from_flag/pairs.csv")));
  EXPECT_FALSE(fs::exists(ws.path("out")));
}

TEST(Cli, WritesOnlyInsideOutputDirectory) {
  Workspace ws(TaskKind::SingleLabel, 30, 2, 2, 4);
  const auto cfg = ws.write_config();
  const auto before = ws.listing();
  ASSERT_EQ(invoke({"train", "--config", cfg}).code, kExitOk);
  ASSERT_EQ(invoke({"eval", "--config", cfg, "--raw"}).code, kExitOk);
  for (const auto& f : ws.listing()) {
    if (!before.count(f)) {
      EXPECT_EQ(f.rfind("out", 0), 0u) << f;
    }
  }
}

TEST(Cli, PairsCsvMatchesGenerator) {
  Workspace ws(TaskKind::MultiLabel, 12, 2, 3, 5);
  ws.config()["train"]["pairs"] = "all";
  const auto cfg = ws.write_config();
  ASSERT_EQ(invoke({"pairs", "--config", cfg}).code, kExitOk);
  const auto text = io::read_file(ws.path("out/pairs.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "first,second,raw_target,target");
  const auto sp = split(ws.dataset(), 0.3, 5);
  const std::size_t m = sp.train.size();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1 + m * (m - 1) / 2);
}

TEST(Cli, EvalRawMlknnMatchesOraclePipeline) {
  Workspace ws(TaskKind::MultiLabel, 60, 3, 4, 6);
  ws.config()["evaluator"] = {{"kind", "mlknn"}, {"k", 5}, {"smoothing", 1.0}};
  const auto cfg = ws.write_config();
  const auto r = invoke({"eval", "--config", cfg, "--raw"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = read_json(ws.path("out/report.json"));

  const auto& ds = ws.dataset();
  const auto sp = split(ds, 0.3, 5);
  const auto xtr = oracle::to_rows(select_rows(ds.features(), sp.train));
  const auto ytr = oracle::to_rows(select_rows(ds.labels(), sp.train));
  const auto xte = oracle::to_rows(select_rows(ds.features(), sp.test));
  const auto yte = oracle::to_rows(select_rows(ds.labels(), sp.test));
  const auto model = oracle::mlknn_fit(xtr, ytr, 5, 1.0);
  oracle::Mat predicted;
  oracle::Mat scores;
  for (const auto& q : xte) {
    auto [labels, s] = oracle::mlknn_predict(model, xtr, ytr, 5, q);
    predicted.push_back(labels);
    scores.push_back(s);
  }
  const auto ref = oracle::ranking_metrics(scores, yte);
  const auto& metrics = report.at("metrics");
  EXPECT_NEAR(metrics.at("hamming_loss").at("mean").get<double>(), oracle::hamming_loss(predicted, yte), 1e-12);
  EXPECT_NEAR(metrics.at("ranking_loss").at("mean").get<double>(), ref.ranking_loss, 1e-12);
  EXPECT_NEAR(metrics.at("one_error").at("mean").get<double>(), ref.one_error, 1e-12);
  EXPECT_NEAR(metrics.at("coverage").at("mean").get<double>(), ref.coverage, 1e-12);
  EXPECT_NEAR(metrics.at("average_precision").at("mean").get<double>(), ref.average_precision, 1e-12);
  EXPECT_TRUE(fs::exists(ws.path("out/predictions_r0.csv")));
  EXPECT_TRUE(fs::exists(ws.path("out/report.csv")));
}

TEST(Cli, EvalRepeatsAndModelInput) {
  Workspace ws(TaskKind::LabelDistribution, 40, 3, 3, 7);
  ws.config()["repeats"] = 2;
  const auto cfg = ws.write_config();
  ASSERT_EQ(invoke({"train", "--config", cfg}).code, kExitOk);
  const auto trained = invoke({"eval", "--config", cfg, "--out", ws.path("e1").string()});
  ASSERT_EQ(trained.code, kExitOk) << trained.err;
  const auto report = read_json(ws.path("e1/report.json"));
  EXPECT_EQ(report.at("metrics").at("clark").at("runs"), 2);
  EXPECT_NE(trained.out.find("+-"), std::string::npos);
  EXPECT_TRUE(fs::exists(ws.path("e1/predictions_r1.csv")));

  const auto fixed = invoke({"eval", "--config", cfg, "--model", ws.path("out/model.json").string(), "--out",
                             ws.path("e2").string()});
  EXPECT_EQ(fixed.code, kExitOk) << fixed.err;
  EXPECT_EQ(invoke({"eval", "--config", cfg, "--model", ws.path("out/model.json").string(), "--raw"}).code,
            kExitConfig);
}

TEST(Cli, BaselineWritesMetric) {
  Workspace ws(TaskKind::SingleLabel, 40, 2, 2, 8);
  const auto cfg = ws.write_config();
  const auto r = invoke({"baseline", "--config", cfg});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto metric = read_json(ws.path("out/linear_metric_r0.json"));
  EXPECT_EQ(metric.at("M").size(), 2u);
  const auto report = read_json(ws.path("out/report.json"));
  EXPECT_TRUE(report.at("metrics").contains("accuracy"));
  EXPECT_EQ(report.at("metrics").at("fit_residual_rms").at("orientation"), "lower_better");
}

TEST(Cli, ExitCodes) {
  Workspace ws(TaskKind::SingleLabel, 30, 2, 2, 9);
  const auto good = ws.write_config();

  ws.config()["bogus"] = 1;
  EXPECT_EQ(invoke({"train", "--config", ws.write_config("unknown.json")}).code, kExitConfig);
  ws.config().erase("bogus");
  EXPECT_EQ(invoke({"train", "--config", ws.path("absent.json").string()}).code, kExitConfig);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitConfig);

  ws.config()["dataset"]["path"] = "missing.csv";
  EXPECT_EQ(invoke({"train", "--config", ws.write_config("missing.json")}).code, kExitData);
  ws.config()["dataset"]["path"] = "data.csv";

  ws.config()["train"]["layer_sizes"] = {5, 3};
  EXPECT_EQ(invoke({"train", "--config", ws.write_config("dims.json")}).code, kExitData);
  ws.config()["train"]["layer_sizes"] = {2, 6, 3};

  ws.config()["train"]["learning_rate"] = 1e6;
  ws.config()["train"]["lambda"] = 0.1;
  const auto diverged = invoke({"train", "--config", ws.write_config("diverge.json")});
  EXPECT_EQ(diverged.code, kExitDiverged);
  EXPECT_NE(diverged.err.find("diverged at step"), std::string::npos);
  ws.config()["train"]["learning_rate"] = 0.05;
  ws.config()["train"].erase("lambda");

  ws.config()["evaluator"] = {{"kind", "mlknn"}};
  EXPECT_EQ(invoke({"eval", "--config", ws.write_config("mismatch.json"), "--raw"}).code, kExitMismatch);
  ws.config().erase("evaluator");

  EXPECT_EQ(invoke({"gradcheck", "--trials", "3"}).code, kExitOk);
  EXPECT_EQ(invoke({"gradcheck", "--trials", "2", "--tolerance", "1e-300"}).code, kExitCheckFailed);
  EXPECT_EQ(invoke({"gradcheck", "--trials", "0"}).code, kExitConfig);
  EXPECT_EQ(invoke({"train", "--config", good}).code, kExitOk);
}

TEST(Cli, BaselineWithoutRidgeNeedsEnoughPairs) {
  Workspace ws(TaskKind::SingleLabel, 12, 20, 2, 10);
  ws.config()["train"]["layer_sizes"] = {20, 4};
  ws.config()["baseline"] = {{"ridge", 0.0}};
  EXPECT_EQ(invoke({"baseline", "--config", ws.write_config()}).code, kExitData);
}

TEST(RunConfig, RoundTripsThroughJson) {
  fixtures::TempDir dir("runcfg");
  io::write_file_atomic(dir / "d.csv", "a,y\n1,0\n2,1\n");
  const std::string text = R"({"dataset": {"path": "d.csv", "kind": "multi_label", "label_columns": ["y"]},
    "train": {"layer_sizes": [1, 2], "pairs": 40, "mining": {"kind": "hard_topk", "pool": 20, "keep": 4},
              "target_transform": {"kind": "scale", "max": 4}, "output_activation": "linear"},
    "repeats": 3})";
  const auto cfg = parse_run_config(text, dir.path());
  EXPECT_EQ(cfg.evaluator.kind, EvaluatorKind::Mlknn);
  EXPECT_EQ(cfg.evaluator.k, 10u);
  EXPECT_TRUE(cfg.dataset.path.is_absolute());
  EXPECT_TRUE(cfg.train.linear_output);
  const auto again = parse_run_config(run_config_to_json(cfg), "/");
  EXPECT_EQ(run_config_to_json(again), run_config_to_json(cfg));

  for (const char* bad : {R"({"dataset": {"path": "d.csv", "kind": "multi_label", "label_columns": "y"},
                              "train": {"layer_sizes": [1, 2], "momentum": 0.9}})",
                          R"({"dataset": {"path": "d.csv", "kind": "multi_label", "label_columns": "y"},
                              "train": {"layer_sizes": [1, 2], "batch_size": 0}})",
                          R"({"dataset": {"path": "d.csv", "kind": "multi_label"}, "train": {"layer_sizes": [1, 2]}})",
                          R"({"train": {"layer_sizes": [1, 2]}})", "not json"}) {
    try {
      parse_run_config(bad, dir.path());
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SchemaError) << bad;
    }
  }
}

}  // namespace
}  // namespace hraml::cli
