#pragma once

#include <Eigen/Dense>

#include <vector>

namespace rvq {

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;

  double raw_score(const Eigen::VectorXd& x) const { return weights.dot(x) + bias; }
  double predict(const Eigen::VectorXd& x) const { return raw_score(x); }
  int classify(const Eigen::VectorXd& x) const { return raw_score(x) >= 0.0 ? 1 : 0; }
};

// Deterministic full-batch gradient descent on the L2-regularized logistic
// loss (penalty on weights, not bias); stops at gradient norm <= 1e-5 or
// 10000 iterations.
LinearModel fit_logistic(const Eigen::MatrixXd& features, const std::vector<int>& labels01,
                         double l2);

// Closed-form ridge via normal equations, L2 on weights only. A singular
// system with l2 == 0 raises an error advising l2 > 0.
LinearModel fit_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double l2);

// Sample Pearson correlation; zero variance on either side is an error.
double pearson(const std::vector<double>& predictions, const std::vector<double>& labels);

}  // namespace rvq
