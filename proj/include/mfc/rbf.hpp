#pragma once

// Gaussian radial-basis ridge regression:
//
//   predict(x) = sum_j weights(j, :) * exp(-|x - node_j|^2 / (2 delta))
//
// with weights minimizing |targets - A W|^2 + ridge |W|^2.

#include "mfc/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mfc {

struct RbfModel {
  std::vector<State> nodes;
  double delta = 1.0;
  double ridge = 0.0;
  Eigen::MatrixXd weights;  // L x n_outputs

  Eigen::RowVectorXd features(const State& x) const;
  Eigen::RowVectorXd predict(const State& x) const;
};

// Design matrix A(i, j) = exp(-|x_i - node_j|^2 / (2 delta)).
Eigen::MatrixXd rbf_design(std::span<const State> points,
                           std::span<const State> nodes, double delta);

// targets is M x n_outputs. Throws std::runtime_error when the system is
// rank deficient even after regularization (increase the ridge weight).
RbfModel rbf_fit(std::span<const State> features,
                 const Eigen::MatrixXd& targets, std::vector<State> nodes,
                 double delta, double ridge);

// Median of squared pairwise node distances; 1 if all nodes coincide.
double median_bandwidth(std::span<const State> nodes);

}  // namespace mfc
