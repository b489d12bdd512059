#include "rvq/regression.hpp"

#include <cmath>
#include <stdexcept>

namespace rvq {

LinearModel fit_logistic(const Eigen::MatrixXd& features, const std::vector<int>& labels01,
                         double l2) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n < 2 || static_cast<Eigen::Index>(labels01.size()) != n)
    throw std::invalid_argument("fit_logistic: need >= 2 labeled examples");
  bool has_pos = false, has_neg = false;
  Eigen::VectorXd y(n);  // +/-1
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels01[static_cast<std::size_t>(i)] == 1) {
      y(i) = 1.0;
      has_pos = true;
    } else {
      y(i) = -1.0;
      has_neg = true;
    }
  }
  if (!has_pos || !has_neg)
    throw std::invalid_argument("fit_logistic: both classes must be present");

  // Step size from the logistic-loss Lipschitz bound: 0.25 * max_i ||x_i||^2
  // (bias coordinate included) + l2.
  double max_norm2 = 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    max_norm2 = std::max(max_norm2, features.row(i).squaredNorm() + 1.0);
  const double lr = 1.0 / (0.25 * max_norm2 + l2);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::VectorXd grad_w = l2 * w;
    double grad_b = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double margin = y(i) * (features.row(i).dot(w) + b);
      const double sig = 1.0 / (1.0 + std::exp(margin));  // d/dm log(1+e^-m)
      grad_w -= (sig * y(i) / static_cast<double>(n)) * features.row(i).transpose();
      grad_b -= sig * y(i) / static_cast<double>(n);
    }
    const double gnorm = std::sqrt(grad_w.squaredNorm() + grad_b * grad_b);
    if (gnorm <= 1e-5) break;
    w -= lr * grad_w;
    b -= lr * grad_b;
  }
  return {w, b};
}

LinearModel fit_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double l2) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n < 2 || targets.size() != n)
    throw std::invalid_argument("fit_ridge: need >= 2 labeled examples");

  Eigen::MatrixXd design(n, d + 1);
  design.leftCols(d) = features;
  design.col(d).setOnes();
  Eigen::MatrixXd normal = design.transpose() * design;
  for (Eigen::Index j = 0; j < d; ++j) normal(j, j) += l2;  // bias stays unpenalized

  if (l2 == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (!lu.isInvertible())
      throw std::runtime_error(
          "fit_ridge: singular normal equations with l2 = 0; use l2 > 0");
    Eigen::VectorXd sol = lu.solve(design.transpose() * targets);
    return {sol.head(d), sol(d)};
  }
  Eigen::VectorXd sol = normal.ldlt().solve(design.transpose() * targets);
  return {sol.head(d), sol(d)};
}

double pearson(const std::vector<double>& predictions, const std::vector<double>& labels) {
  const std::size_t n = predictions.size();
  if (n < 2 || labels.size() != n)
    throw std::invalid_argument("pearson: need >= 2 paired values");
  double mean_p = 0.0, mean_l = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_p += predictions[i];
    mean_l += labels[i];
  }
  mean_p /= static_cast<double>(n);
  mean_l /= static_cast<double>(n);
  double cov = 0.0, var_p = 0.0, var_l = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = predictions[i] - mean_p;
    const double dl = labels[i] - mean_l;
    cov += dp * dl;
    var_p += dp * dp;
    var_l += dl * dl;
  }
  if (var_p == 0.0 || var_l == 0.0)
    throw std::runtime_error("pearson: zero variance in inputs");
  return cov / std::sqrt(var_p * var_l);
}

}  // namespace rvq
