#include "commands.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "hraml/dataset.hpp"
#include "hraml/error.hpp"
#include "hraml/evaluators.hpp"
#include "hraml/gradcheck.hpp"
#include "hraml/io.hpp"
#include "hraml/linear_raml.hpp"
#include "hraml/metrics.hpp"
#include "hraml/network.hpp"
#include "hraml/trainer.hpp"
#include "run_config.hpp"

namespace hraml::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Seed stream for the baseline's pair draw, distinct from the trainer's.
constexpr std::uint64_t kBaselinePairStream = 0x4000;

struct Context {
  RunConfig config;
  fs::path out_dir;
};

/// Config-phase failures (unreadable or invalid config) exit 1.
std::optional<Context> load_context(const CommonOptions& common, std::ostream& err) {
  try {
    Context ctx{load_run_config(common.config), {}};
    if (common.seed) {
      ctx.config.seed = *common.seed;
      ctx.config.train.seed = *common.seed;
    }
    if (common.out) {
      ctx.out_dir = *common.out;
    } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
      ctx.out_dir = env;
    } else {
      ctx.out_dir = ctx.config.output_dir;
    }
    ctx.out_dir = fs::absolute(ctx.out_dir).lexically_normal();
    ctx.config.output_dir = ctx.out_dir;
    return ctx;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return std::nullopt;
  }
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Diverged: return kExitDiverged;
    case ErrorCode::InvalidArgument: return kExitConfig;
    default: return kExitData;
  }
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const DivergedError& e) {
    err << "training diverged at step " << e.step() << ": " << e.what() << "\n";
    return kExitDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

Dataset load_dataset(const RunConfig& cfg) {
  const auto& spec = cfg.dataset;
  if (!fs::exists(spec.path)) throw Error(ErrorCode::IoError, "dataset file not found: " + spec.path.string());
  Dataset ds = spec.format == "sparse" ? load_sparse(spec.path, spec.kind)
                                       : load_csv(spec.path, spec.kind, spec.label_columns);
  if (cfg.standardize) ds = standardize_features(ds).first;
  return ds;
}

std::string dataset_name(const RunConfig& cfg) { return cfg.dataset.path.stem().string(); }

void write_output(const fs::path& dir, const std::string& name, std::string_view contents) {
  fs::create_directories(dir);
  io::write_file_atomic(dir / name, contents);
}

std::string label_name(const Dataset& ds, std::size_t l) {
  const auto& names = ds.label_names();
  return l < names.size() && !names[l].empty() ? names[l] : "l" + std::to_string(l);
}

/// Runs the configured evaluator on one split's embeddings, records the
/// metrics, and returns the per-sample predictions as CSV.
std::string evaluate_split(const RunConfig& cfg, const Dataset& ds, const Split& sp, const Eigen::MatrixXd& train_emb,
                           const Eigen::MatrixXd& test_emb, EvalReport& report) {
  const Eigen::MatrixXd train_labels = select_rows(ds.labels(), sp.train);
  const Eigen::MatrixXd test_labels = select_rows(ds.labels(), sp.test);
  const NeighborIndex index(train_emb, train_labels);
  const auto L = static_cast<std::size_t>(ds.num_labels());
  const std::size_t k = cfg.evaluator.k;
  std::ostringstream csv;

  switch (cfg.evaluator.kind) {
    case EvaluatorKind::Knn: {
      const auto truth = ds.class_ids();
      std::vector<int> predicted;
      std::vector<int> expected;
      csv << "index,truth,predicted\n";
      for (std::size_t t = 0; t < sp.test.size(); ++t) {
        const int p = knn_predict(index, test_emb.row(static_cast<Eigen::Index>(t)).transpose(), k);
        predicted.push_back(p);
        expected.push_back(truth[sp.test[t]]);
        csv << sp.test[t] << "," << expected.back() << "," << p << "\n";
      }
      report.record("accuracy", accuracy(predicted, expected));
      break;
    }
    case EvaluatorKind::Mlknn: {
      const auto model = mlknn_fit(train_emb, train_labels, k, cfg.evaluator.smoothing);
      Eigen::MatrixXd scores(test_labels.rows(), test_labels.cols());
      Eigen::MatrixXd predicted(test_labels.rows(), test_labels.cols());
      csv << "index";
      for (std::size_t l = 0; l < L; ++l) csv << ",truth_" << label_name(ds, l);
      for (std::size_t l = 0; l < L; ++l) csv << ",predicted_" << label_name(ds, l);
      for (std::size_t l = 0; l < L; ++l) csv << ",score_" << label_name(ds, l);
      csv << "\n";
      for (std::size_t t = 0; t < sp.test.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        const auto pred = mlknn_predict(model, index, test_emb.row(row).transpose());
        predicted.row(row) = pred.labels.transpose();
        scores.row(row) = pred.scores.transpose();
        csv << sp.test[t];
        for (Eigen::Index l = 0; l < test_labels.cols(); ++l) csv << "," << io::format_double(test_labels(row, l));
        for (Eigen::Index l = 0; l < test_labels.cols(); ++l) csv << "," << io::format_double(pred.labels(l));
        for (Eigen::Index l = 0; l < test_labels.cols(); ++l) csv << "," << io::format_double(pred.scores(l));
        csv << "\n";
      }
      report.record(multilabel_metrics(scores, predicted, test_labels));
      break;
    }
    case EvaluatorKind::Aaknn: {
      Eigen::MatrixXd predicted(test_labels.rows(), test_labels.cols());
      csv << "index";
      for (std::size_t l = 0; l < L; ++l) csv << ",truth_" << label_name(ds, l);
      for (std::size_t l = 0; l < L; ++l) csv << ",predicted_" << label_name(ds, l);
      csv << "\n";
      for (std::size_t t = 0; t < sp.test.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        predicted.row(row) = aaknn_predict(index, test_emb.row(row).transpose(), k).transpose();
        csv << sp.test[t];
        for (Eigen::Index l = 0; l < test_labels.cols(); ++l) csv << "," << io::format_double(test_labels(row, l));
        for (Eigen::Index l = 0; l < test_labels.cols(); ++l) csv << "," << io::format_double(predicted(row, l));
        csv << "\n";
      }
      report.record(ldl_metrics(predicted, test_labels));
      break;
    }
  }
  return csv.str();
}

int check_evaluator(const RunConfig& cfg, std::ostream& err) {
  if (evaluator_matches(cfg.evaluator.kind, cfg.dataset.kind)) return kExitOk;
  err << "evaluator " << to_string(cfg.evaluator.kind) << " does not apply to " << to_string(cfg.dataset.kind)
      << " data\n";
  return kExitMismatch;
}

/// Embedding under a PSD metric: rows x -> x V diag(sqrt(max(eig, 0))), so
/// Euclidean distances between embeddings equal the metric's quadratic form.
Eigen::MatrixXd metric_embedding(const Eigen::MatrixXd& features, const Eigen::MatrixXd& M) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return features * eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

int cmd_train(const CommonOptions& common, std::ostream& out, std::ostream& err) {
  auto ctx = load_context(common, err);
  if (!ctx) return kExitConfig;
  return guarded(err, [&] {
    const auto& cfg = ctx->config;
    const Dataset ds = load_dataset(cfg);
    const Split sp = split(ds, cfg.test_fraction, cfg.seed);
    const auto result = train(ds, sp, cfg.train);
    const auto& log = result.log;

    ordered_json summary;
    summary["dataset"] = dataset_name(cfg);
    summary["seed"] = cfg.seed;
    summary["train_size"] = sp.train.size();
    summary["test_size"] = sp.test.size();
    summary["layer_sizes"] = result.model.layer_sizes();
    summary["parameter_count"] = result.model.parameter_count();
    summary["pair_count"] = log.pair_count;
    summary["steps"] = log.steps();
    summary["stop_reason"] = std::string(to_string(log.stop_reason));
    summary["final_loss"] = log.loss.back();
    summary["final_ma_loss"] = log.ma_loss.back();
    summary["target_max"] = result.transform.kind() == TargetTransformSpec::Kind::Identity
                                ? ordered_json(nullptr)
                                : ordered_json(result.transform.fitted_max());
    ordered_json timing;
    timing["wall_seconds"] = log.wall_seconds;

    write_output(ctx->out_dir, "config.effective.json", run_config_to_json(cfg));
    write_output(ctx->out_dir, "model.json", model_to_json(result.model));
    write_output(ctx->out_dir, "trainlog.csv", log.to_csv());
    write_output(ctx->out_dir, "summary.json", summary.dump(2) + "\n");
    write_output(ctx->out_dir, "timing.json", timing.dump(2) + "\n");
    out << "trained " << log.steps() << " steps (" << to_string(log.stop_reason) << "), final moving-average loss "
        << io::format_double(log.ma_loss.back()) << "\n";
    out << "wrote " << (ctx->out_dir / "model.json").string() << "\n";
    return kExitOk;
  });
}

int cmd_eval(const CommonOptions& common, const EvalOptions& eval, std::ostream& out, std::ostream& err) {
  auto ctx = load_context(common, err);
  if (!ctx) return kExitConfig;
  if (eval.model && eval.raw) {
    err << "config error: --model and --raw are exclusive\n";
    return kExitConfig;
  }
  const auto& cfg = ctx->config;
  if (const int rc = check_evaluator(cfg, err); rc != kExitOk) return rc;
  return guarded(err, [&] {
    const Dataset ds = load_dataset(cfg);
    std::optional<MlpModel> fixed;
    if (eval.model) {
      fixed = load_model(*eval.model);
      if (fixed->input_size() != ds.dims()) {
        throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(fixed->input_size()) +
                                                      " features, dataset has " + std::to_string(ds.dims()));
      }
    }
    EvalReport report;
    report.dataset = dataset_name(cfg);
    report.model = eval.raw ? "raw" : "hraml";
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t seed = cfg.seed + r;
      const Split sp = split(ds, cfg.test_fraction, seed);
      Eigen::MatrixXd train_emb;
      Eigen::MatrixXd test_emb;
      if (eval.raw) {
        train_emb = select_rows(ds.features(), sp.train);
        test_emb = select_rows(ds.features(), sp.test);
      } else {
        MlpModel model;
        if (fixed) {
          model = *fixed;
        } else {
          auto tc = cfg.train;
          tc.seed = seed;
          model = train(ds, sp, tc).model;
        }
        train_emb = embed_all(model, ds, sp.train);
        test_emb = embed_all(model, ds, sp.test);
      }
      const auto predictions = evaluate_split(cfg, ds, sp, train_emb, test_emb, report);
      write_output(ctx->out_dir, "predictions_r" + std::to_string(r) + ".csv", predictions);
    }
    write_output(ctx->out_dir, "config.effective.json", run_config_to_json(cfg));
    write_output(ctx->out_dir, "report.json", report.to_json());
    write_output(ctx->out_dir, "report.csv", report.to_csv());
    for (const auto& [name, series] : report.metrics()) {
      out << name << " " << io::format_double(series.mean()) << " +- " << io::format_double(series.stddev()) << "\n";
    }
    return kExitOk;
  });
}

int cmd_baseline(const CommonOptions& common, std::ostream& out, std::ostream& err) {
  auto ctx = load_context(common, err);
  if (!ctx) return kExitConfig;
  const auto& cfg = ctx->config;
  if (const int rc = check_evaluator(cfg, err); rc != kExitOk) return rc;
  return guarded(err, [&] {
    const Dataset ds = load_dataset(cfg);
    EvalReport report;
    report.dataset = dataset_name(cfg);
    report.model = "linear_raml";
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t seed = cfg.seed + r;
      const Split sp = split(ds, cfg.test_fraction, seed);
      const auto fit = fit_linear(ds, sp, cfg.train.relation, cfg.train.target_transform, cfg.baseline.ridge,
                                  cfg.baseline.project_psd, cfg.baseline.pairs, mix_seed(seed, kBaselinePairStream));
      report.record("fit_residual_rms", fit.residual_rms(), Orientation::LowerBetter);
      const Eigen::MatrixXd train_emb = metric_embedding(select_rows(ds.features(), sp.train), fit.metric.M);
      const Eigen::MatrixXd test_emb = metric_embedding(select_rows(ds.features(), sp.test), fit.metric.M);
      const auto predictions = evaluate_split(cfg, ds, sp, train_emb, test_emb, report);
      write_output(ctx->out_dir, "linear_metric_r" + std::to_string(r) + ".json", linear_metric_to_json(fit.metric));
      write_output(ctx->out_dir, "predictions_r" + std::to_string(r) + ".csv", predictions);
    }
    write_output(ctx->out_dir, "config.effective.json", run_config_to_json(cfg));
    write_output(ctx->out_dir, "report.json", report.to_json());
    write_output(ctx->out_dir, "report.csv", report.to_csv());
    for (const auto& [name, series] : report.metrics()) {
      out << name << " " << io::format_double(series.mean()) << " +- " << io::format_double(series.stddev()) << "\n";
    }
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err) {
  if (options.trials < 1) {
    err << "config error: trials must be at least 1\n";
    return kExitConfig;
  }
  if (!(options.tolerance > 0.0)) {
    err << "config error: tolerance must be positive\n";
    return kExitConfig;
  }
  if (!options.architecture.empty()) {
    if (options.architecture.size() < 2) {
      err << "config error: an architecture needs at least input and output sizes\n";
      return kExitConfig;
    }
    for (auto s : options.architecture) {
      if (s < 1) {
        err << "config error: layer sizes must be positive\n";
        return kExitConfig;
      }
    }
  }
  GradCheckConfig cfg;
  cfg.trials = options.trials;
  cfg.tolerance = options.tolerance;
  cfg.architecture = options.architecture;
  cfg.seed = options.seed;
  return guarded(err, [&] {
    const auto report = run_gradcheck(cfg);
    out << "trials " << report.trials << ", coordinates " << report.coordinates << ", failures " << report.failures
        << "\n";
    out << "max relative error " << io::format_double(report.max_rel_error) << "\n";
    out << "max absolute error " << io::format_double(report.max_abs_error) << "\n";
    if (report.passed()) return kExitOk;
    const auto& w = report.worst;
    std::ostringstream arch;
    for (std::size_t i = 0; i < w.architecture.size(); ++i) arch << (i ? "," : "") << w.architecture[i];
    err << "gradient check failed; worst coordinate: trial " << w.trial << ", route " << to_string(w.route)
        << ", architecture " << arch.str() << ", layer " << w.layer << (w.is_bias ? " bias" : " weight") << " ["
        << w.row;
    if (!w.is_bias) err << "," << w.col;
    err << "], analytic " << io::format_double(w.analytic) << ", numeric " << io::format_double(w.numeric)
        << ", relative error " << io::format_double(w.rel_error) << "\n";
    return kExitCheckFailed;
  });
}

int cmd_pairs(const CommonOptions& common, std::ostream& out, std::ostream& err) {
  auto ctx = load_context(common, err);
  if (!ctx) return kExitConfig;
  return guarded(err, [&] {
    const auto& cfg = ctx->config;
    const Dataset ds = load_dataset(cfg);
    const Split sp = split(ds, cfg.test_fraction, cfg.seed);
    const auto batch = training_pairs(ds, sp, cfg.train);
    std::ostringstream csv;
    csv << "first,second,raw_target,target\n";
    for (const auto& p : batch.pairs) {
      const double raw = relation_value(cfg.train.relation, ds.labels().row(static_cast<Eigen::Index>(p.first)),
                                        ds.labels().row(static_cast<Eigen::Index>(p.second)));
      csv << p.first << "," << p.second << "," << io::format_double(raw) << "," << io::format_double(p.target)
          << "\n";
    }
    write_output(ctx->out_dir, "pairs.csv", csv.str());
    out << "wrote " << batch.size() << " pairs to " << (ctx->out_dir / "pairs.csv").string() << "\n";
    return kExitOk;
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relation-aligned metric learning toolkit", "hraml"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string out_dir;
  std::uint64_t seed = 0;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory; overrides the config and HRAML_OUT_DIR");
    sub->add_option("--seed", seed, "Seed; overrides the config");
  };

  auto* train_cmd = app.add_subcommand("train", "Train an HRAML encoder");
  add_common(train_cmd);

  EvalOptions eval;
  std::string model_path;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate embeddings with the configured evaluator");
  add_common(eval_cmd);
  eval_cmd->add_option("--model", model_path, "Trained model; otherwise a model is trained per repeat");
  eval_cmd->add_flag("--raw", eval.raw, "Evaluate raw features instead of embeddings");

  auto* baseline_cmd = app.add_subcommand("baseline", "Fit and evaluate the linear relation-aligned metric");
  add_common(baseline_cmd);

  auto* pairs_cmd = app.add_subcommand("pairs", "Write the generated training pairs and targets to CSV");
  add_common(pairs_cmd);

  GradcheckOptions grad;
  std::string arch;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  grad_cmd->add_option("--arch", arch, "Comma-separated layer sizes; random architectures when omitted");
  grad_cmd->add_option("--trials", grad.trials, "Number of random trials");
  grad_cmd->add_option("--tolerance", grad.tolerance, "Relative error tolerance");
  grad_cmd->add_option("--seed", grad.seed, "Seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  if (!out_dir.empty()) common.out = out_dir;
  for (auto* sub : {train_cmd, eval_cmd, baseline_cmd, pairs_cmd}) {
    if (sub->parsed() && sub->count("--seed") > 0) common.seed = seed;
  }
  if (!model_path.empty()) eval.model = model_path;

  if (*train_cmd) return cmd_train(common, out, err);
  if (*eval_cmd) return cmd_eval(common, eval, out, err);
  if (*baseline_cmd) return cmd_baseline(common, out, err);
  if (*pairs_cmd) return cmd_pairs(common, out, err);
  if (!arch.empty()) {
    std::stringstream ss(arch);
    std::string token;
    while (std::getline(ss, token, ',')) {
      const auto v = io::parse_int(token);
      if (!v || *v < 1) {
        err << "config error: bad --arch entry '" << token << "'\n";
        return kExitConfig;
      }
      grad.architecture.push_back(static_cast<std::size_t>(*v));
    }
  }
  return cmd_gradcheck(grad, out, err);
}

}  // namespace hraml::cli
