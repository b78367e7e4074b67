#include "hraml/linear_raml.hpp"

#include <cmath>
#include <json.hpp>

#include "hraml/error.hpp"
#include "hraml/io.hpp"

namespace hraml {

namespace {

using json = nlohmann::json;

// Pair features phi(delta): delta_k^2 on the diagonal, 2 delta_k delta_l above
// it, then a trailing 1 for the offset. <M, T> = phi . theta for the upper
// triangle theta of M.
void pair_design_row(const Eigen::VectorXd& delta, Eigen::VectorXd& phi) {
  const Eigen::Index d = delta.size();
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < d; ++r) {
    phi(k++) = delta(r) * delta(r);
    for (Eigen::Index c = r + 1; c < d; ++c) phi(k++) = 2.0 * delta(r) * delta(c);
  }
  phi(k) = 1.0;
}

Eigen::MatrixXd unpack_upper(const Eigen::VectorXd& theta, Eigen::Index d) {
  Eigen::MatrixXd M(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < d; ++r) {
    M(r, r) = theta(k++);
    for (Eigen::Index c = r + 1; c < d; ++c) {
      M(r, c) = theta(k);
      M(c, r) = theta(k);
      ++k;
    }
  }
  return M;
}

}  // namespace

double LinearFit::residual_rms() const {
  return pair_count == 0 ? 0.0 : std::sqrt(residual_ss / static_cast<double>(pair_count));
}

Eigen::MatrixXd project_to_psd(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

LinearFit fit_linear_pairs(const Eigen::MatrixXd& features, std::span<const Pair> pairs, double ridge,
                           bool project_psd) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw Error(ErrorCode::InvalidArgument, "ridge must be finite and >= 0");
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "no pairs to fit");
  const Eigen::Index d = features.cols();
  const Eigen::Index params = d * (d + 1) / 2 + 1;
  if (ridge == 0.0 && static_cast<Eigen::Index>(pairs.size()) < params) {
    throw Error(ErrorCode::SingularSystem, std::to_string(pairs.size()) + " pairs cannot determine " +
                                               std::to_string(params) + " parameters without ridge");
  }

  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(params, params);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(params);
  Eigen::VectorXd phi(params);
  for (const auto& p : pairs) {
    const Eigen::VectorXd delta =
        (features.row(static_cast<Eigen::Index>(p.first)) - features.row(static_cast<Eigen::Index>(p.second))).transpose();
    pair_design_row(delta, phi);
    normal.selfadjointView<Eigen::Lower>().rankUpdate(phi);
    rhs += p.target * phi;
  }
  normal.triangularView<Eigen::StrictlyUpper>() = normal.transpose();
  if (ridge > 0.0) {
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < d; ++r) {
      normal(k, k) += ridge;
      ++k;
      for (Eigen::Index c = r + 1; c < d; ++c, ++k) normal(k, k) += 2.0 * ridge;
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  if (qr.rank() < params) {
    throw Error(ErrorCode::SingularSystem, "normal equations have rank " + std::to_string(qr.rank()) + " of " +
                                               std::to_string(params));
  }
  const Eigen::VectorXd theta = qr.solve(rhs);
  if (!theta.allFinite()) throw Error(ErrorCode::SingularSystem, "solution is not finite");

  LinearFit fit;
  fit.metric.M = unpack_upper(theta, d);
  fit.metric.b = theta(params - 1);
  if (project_psd) {
    fit.metric.M = project_to_psd(fit.metric.M);
    fit.metric.psd_projected = true;
  }
  fit.pair_count = pairs.size();
  for (const auto& p : pairs) {
    const double pred = metric_distance(fit.metric, features.row(static_cast<Eigen::Index>(p.first)).transpose(),
                                        features.row(static_cast<Eigen::Index>(p.second)).transpose());
    fit.residual_ss += (pred - p.target) * (pred - p.target);
  }
  return fit;
}

LinearFit fit_linear(const Dataset& ds, const Split& split, RelationKind relation,
                     const TargetTransformSpec& transform, double ridge, bool project_psd, PairBudget budget,
                     std::uint64_t seed) {
  const auto pairs = generate_pairs(ds, split, relation, transform, budget, seed);
  return fit_linear_pairs(ds.features(), pairs.pairs, ridge, project_psd);
}

double metric_distance(const LinearMetric& lm, const Eigen::Ref<const Eigen::VectorXd>& xi,
                       const Eigen::Ref<const Eigen::VectorXd>& xj) {
  if (xi.size() != lm.M.rows() || xj.size() != lm.M.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from metric dimension");
  }
  const Eigen::VectorXd delta = xi - xj;
  return delta.dot(lm.M * delta) + lm.b;
}

std::string linear_metric_to_json(const LinearMetric& lm) {
  json doc;
  doc["dim"] = lm.M.rows();
  json rows = json::array();
  for (Eigen::Index r = 0; r < lm.M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < lm.M.cols(); ++c) row.push_back(lm.M(r, c));
    rows.push_back(std::move(row));
  }
  doc["M"] = std::move(rows);
  doc["b"] = lm.b;
  doc["psd_projected"] = lm.psd_projected;
  return doc.dump(1) + "\n";
}

LinearMetric linear_metric_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    LinearMetric lm;
    const auto d = doc.at("dim").get<Eigen::Index>();
    const auto& rows = doc.at("M");
    if (d < 1 || rows.size() != static_cast<std::size_t>(d)) throw Error(ErrorCode::SchemaError, "M has the wrong shape");
    lm.M.resize(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (row.size() != static_cast<std::size_t>(d)) throw Error(ErrorCode::SchemaError, "M row has the wrong length");
      for (Eigen::Index c = 0; c < d; ++c) lm.M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    lm.b = doc.at("b").get<double>();
    lm.psd_projected = doc.at("psd_projected").get<bool>();
    return lm;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed linear metric: ") + e.what());
  }
}

void save_linear_metric(const LinearMetric& lm, const std::filesystem::path& path) {
  io::write_file_atomic(path, linear_metric_to_json(lm));
}

}  // namespace hraml
