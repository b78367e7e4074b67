#include "fixtures.hpp"

#include <atomic>
#include <chrono>

namespace hraml::fixtures {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          ("hraml_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter.fetch_add(1)));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Dataset xor_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double s1 = (i % 2 == 0) ? 1.0 : -1.0;
    const double s2 = ((i / 2) % 2 == 0) ? 1.0 : -1.0;
    x(r, 0) = s1 * (0.05 + rng.uniform(0.0, 0.3));
    x(r, 1) = s2 * (0.5 + rng.uniform(0.0, 15.0));
    y(r, s1 == s2 ? 1 : 0) = 1.0;
  }
  return Dataset::create(std::move(x), std::move(y), TaskKind::SingleLabel);
}

Eigen::MatrixXd mlknn_toy_features() {
  Eigen::MatrixXd x(8, 2);
  x << 0.0, 0.0,  //
      0.1, 0.2,   //
      0.3, 0.1,   //
      1.0, 1.1,   //
      1.2, 0.9,   //
      0.9, 1.0,   //
      2.0, 0.2,   //
      2.1, 0.0;
  return x;
}

Eigen::MatrixXd mlknn_toy_labels() {
  Eigen::MatrixXd y(8, 3);
  y << 1, 0, 0,  //
      1, 1, 0,   //
      1, 0, 0,   //
      0, 1, 1,   //
      0, 1, 0,   //
      1, 1, 1,   //
      0, 0, 1,   //
      0, 1, 1;
  return y;
}

MlpModel random_model(const std::vector<std::size_t>& sizes, Rng& rng, bool normalize, bool linear_output) {
  MlpModel model;
  model.normalize_output = normalize;
  model.linear_output = linear_output;
  for (std::size_t m = 0; m + 1 < sizes.size(); ++m) {
    Layer layer{Eigen::MatrixXd(static_cast<Eigen::Index>(sizes[m + 1]), static_cast<Eigen::Index>(sizes[m])),
                Eigen::VectorXd(static_cast<Eigen::Index>(sizes[m + 1]))};
    for (Eigen::Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = rng.uniform(-1.0, 1.0);
    for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) = rng.uniform(-0.5, 0.5);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Eigen::VectorXd random_vector(std::size_t n, Rng& rng) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = rng.normal();
  return v;
}

Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
  return m;
}

Eigen::RowVectorXd random_distribution(std::size_t L, Rng& rng) {
  Eigen::RowVectorXd p(static_cast<Eigen::Index>(L));
  for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = rng.uniform01() < 0.2 ? 0.0 : rng.uniform01();
  if (p.sum() == 0.0) p(static_cast<Eigen::Index>(rng.uniform_index(L))) = 1.0;
  return p / p.sum();
}

Dataset random_dataset(TaskKind kind, std::size_t n, std::size_t d, std::size_t L, Rng& rng) {
  Eigen::MatrixXd x = random_matrix(n, d, rng);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    switch (kind) {
      case TaskKind::SingleLabel: y(r, static_cast<Eigen::Index>(rng.uniform_index(L))) = 1.0; break;
      case TaskKind::MultiLabel:
        for (Eigen::Index l = 0; l < y.cols(); ++l) y(r, l) = rng.uniform01() < 0.4 ? 1.0 : 0.0;
        break;
      case TaskKind::LabelDistribution: y.row(r) = random_distribution(L, rng); break;
    }
  }
  return Dataset::create(std::move(x), std::move(y), kind);
}

}  // namespace hraml::fixtures
