#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hraml/dataset.hpp"
#include "hraml/network.hpp"
#include "hraml/random.hpp"

namespace hraml::fixtures {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Four clusters, class = [sign(x1) == sign(x2)]. Clusters sit close together
/// across x1 and are stretched along x2, so raw Euclidean neighborhoods mix
/// classes while a learned map of x1 * x2 separates them.
Dataset xor_dataset(std::size_t n, std::uint64_t seed);

/// Eight 2-D points with three binary labels, used for the MLkNN oracle checks.
Eigen::MatrixXd mlknn_toy_features();
Eigen::MatrixXd mlknn_toy_labels();

/// Model with weights U[-1, 1] and biases U[-0.5, 0.5].
MlpModel random_model(const std::vector<std::size_t>& sizes, Rng& rng, bool normalize, bool linear_output = false);

Eigen::VectorXd random_vector(std::size_t n, Rng& rng);
Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, Rng& rng);

/// Random dataset of the given kind with n rows, d features and L labels.
Dataset random_dataset(TaskKind kind, std::size_t n, std::size_t d, std::size_t L, Rng& rng);

/// Random probability vector of length L with some exact zeros.
Eigen::RowVectorXd random_distribution(std::size_t L, Rng& rng);

}  // namespace hraml::fixtures
