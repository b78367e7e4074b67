#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hraml::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitData = 2,
  kExitDiverged = 3,
  kExitMismatch = 4,
  kExitCheckFailed = 5,
};

/// Environment variable that overrides the config's output directory.
inline constexpr const char* kOutDirEnv = "HRAML_OUT_DIR";

struct CommonOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

struct EvalOptions {
  /// Trained model to embed with. Without one, a model is trained per repeat
  /// on that repeat's training split.
  std::optional<std::filesystem::path> model;
  /// Evaluate on the (optionally standardized) raw features.
  bool raw = false;
};

struct GradcheckOptions {
  std::vector<std::size_t> architecture;  // random architectures when empty
  std::size_t trials = 100;
  double tolerance = 1e-5;
  std::uint64_t seed = 0;
};

int cmd_train(const CommonOptions& common, std::ostream& out, std::ostream& err);
int cmd_eval(const CommonOptions& common, const EvalOptions& eval, std::ostream& out, std::ostream& err);
int cmd_baseline(const CommonOptions& common, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err);
int cmd_pairs(const CommonOptions& common, std::ostream& out, std::ostream& err);

/// Parses `args` (without the program name) and dispatches to a verb.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hraml::cli
