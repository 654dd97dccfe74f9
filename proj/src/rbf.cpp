#include "mfc/rbf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mfc {

Eigen::RowVectorXd RbfModel::features(const State& x) const {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    row(static_cast<Eigen::Index>(j)) =
        std::exp(-(x - nodes[j]).squaredNorm() / (2.0 * delta));
  }
  return row;
}

Eigen::RowVectorXd RbfModel::predict(const State& x) const {
  return features(x) * weights;
}

Eigen::MatrixXd rbf_design(std::span<const State> points,
                           std::span<const State> nodes, double delta) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(points.size()),
                    static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::exp(-(points[i] - nodes[j]).squaredNorm() / (2.0 * delta));
    }
  }
  return a;
}

RbfModel rbf_fit(std::span<const State> features,
                 const Eigen::MatrixXd& targets, std::vector<State> nodes,
                 double delta, double ridge) {
  if (features.empty() || nodes.empty()) {
    throw std::invalid_argument("rbf_fit needs at least one sample and node");
  }
  if (targets.rows() != static_cast<Eigen::Index>(features.size())) {
    throw std::invalid_argument("rbf_fit: targets/features row mismatch");
  }
  if (!(delta > 0.0) || ridge < 0.0) {
    throw std::invalid_argument("rbf_fit needs delta > 0 and ridge >= 0");
  }

  const auto m = static_cast<Eigen::Index>(features.size());
  const auto l = static_cast<Eigen::Index>(nodes.size());
  const Eigen::MatrixXd a = rbf_design(features, nodes, delta);

  // Ridge as extra rows: [A; sqrt(ridge) I] W = [targets; 0]. QR on the
  // stacked matrix avoids squaring the condition number.
  Eigen::MatrixXd stacked(m + (ridge > 0.0 ? l : 0), l);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(stacked.rows(), targets.cols());
  stacked.topRows(m) = a;
  rhs.topRows(m) = targets;
  if (ridge > 0.0) {
    stacked.bottomRows(l) =
        std::sqrt(ridge) * Eigen::MatrixXd::Identity(l, l);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
  qr.setThreshold(1e-13);
  if (qr.rank() < l) {
    throw std::runtime_error(
        "rbf_fit: design matrix is rank deficient (rank " +
        std::to_string(qr.rank()) + " of " + std::to_string(l) +
        "); increase the ridge weight");
  }

  RbfModel model;
  model.nodes = std::move(nodes);
  model.delta = delta;
  model.ridge = ridge;
  model.weights = qr.solve(rhs);
  return model;
}

double median_bandwidth(std::span<const State> nodes) {
  if (nodes.size() < 2) return 1.0;
  std::vector<double> d2;
  d2.reserve(nodes.size() * (nodes.size() - 1) / 2);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      d2.push_back((nodes[i] - nodes[j]).squaredNorm());
    }
  }
  if (d2.empty()) return 1.0;
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  return *mid > 0.0 ? *mid : 1.0;
}

}  // namespace mfc
