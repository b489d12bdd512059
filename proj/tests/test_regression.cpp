#include <doctest.h>

#include "rvq/regression.hpp"
#include "rvq/rng.hpp"

using namespace rvq;

TEST_CASE("fit_logistic: separable two-point set reaches accuracy 1") {
  Eigen::MatrixXd x(2, 1);
  x << -1.0, 1.0;
  const LinearModel m = fit_logistic(x, {0, 1}, 0.01);
  CHECK(m.classify(x.row(0)) == 0);
  CHECK(m.classify(x.row(1)) == 1);
}

TEST_CASE("fit_logistic: one class only is an error") {
  Eigen::MatrixXd x(2, 1);
  x << -1.0, 1.0;
  CHECK_THROWS_AS(fit_logistic(x, {1, 1}, 0.01), std::invalid_argument);
}

TEST_CASE("fit_ridge: exact recovery of y = 2f + 1 at l2 = 0") {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 1.0, 2.0, 3.0;
  Eigen::VectorXd y(4);
  y << 1.0, 3.0, 5.0, 7.0;
  const LinearModel m = fit_ridge(x, y, 0.0);
  CHECK(m.weights(0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(m.bias == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_ridge: l2 -> infinity shrinks weights to 0, predictions to the mean") {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 1.0, 2.0, 3.0;
  Eigen::VectorXd y(4);
  y << 1.0, 3.0, 5.0, 7.0;
  const LinearModel m = fit_ridge(x, y, 1e12);
  CHECK(std::abs(m.weights(0)) <= 1e-6);
  Eigen::VectorXd probe(1);
  probe << 1.5;
  CHECK(m.predict(probe) == doctest::Approx(4.0).epsilon(1e-4));  // label mean
}

TEST_CASE("fit_ridge: singular system at l2 = 0 advises l2 > 0") {
  Eigen::MatrixXd x(3, 2);  // duplicated column -> rank deficient
  x << 1, 1, 2, 2, 3, 3;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  CHECK_THROWS_WITH_AS(fit_ridge(x, y, 0.0), doctest::Contains("l2 > 0"), std::runtime_error);
}

TEST_CASE("fit_ridge matches an independent normal-equation oracle") {
  Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 40, d = 5;
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
      y(i) = rng.normal();
    }
    const double l2 = 0.3;
    const LinearModel m = fit_ridge(x, y, l2);

    // Oracle: hand-rolled Gaussian elimination on the augmented system.
    const int k = d + 1;
    Eigen::MatrixXd a(n, k);
    a.leftCols(d) = x;
    a.col(d).setOnes();
    Eigen::MatrixXd lhs = a.transpose() * a;
    for (int j = 0; j < d; ++j) lhs(j, j) += l2;
    Eigen::VectorXd rhs = a.transpose() * y;
    for (int col = 0; col < k; ++col) {
      int pivot = col;
      for (int r = col + 1; r < k; ++r)
        if (std::abs(lhs(r, col)) > std::abs(lhs(pivot, col))) pivot = r;
      lhs.row(col).swap(lhs.row(pivot));
      std::swap(rhs(col), rhs(pivot));
      for (int r = 0; r < k; ++r) {
        if (r == col) continue;
        const double f = lhs(r, col) / lhs(col, col);
        lhs.row(r) -= f * lhs.row(col);
        rhs(r) -= f * rhs(col);
      }
    }
    for (int j = 0; j < d; ++j)
      CHECK(m.weights(j) == doctest::Approx(rhs(j) / lhs(j, j)).epsilon(1e-6));
    CHECK(m.bias == doctest::Approx(rhs(d) / lhs(d, d)).epsilon(1e-6));
  }
}

TEST_CASE("pearson: identity, negation, and the frozen oracle value") {
  CHECK(pearson({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {-1, -2, -3}) == doctest::Approx(-1.0));
  // Independent oracle (numpy corrcoef): 5 / sqrt(2 * 38/3) = 0.9933992678.
  CHECK(pearson({1, 2, 3}, {2, 4, 7}) == doctest::Approx(0.9933992677987828).epsilon(1e-10));
}

TEST_CASE("pearson: zero variance is an error") {
  CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), std::runtime_error);
  CHECK_THROWS_AS(pearson({1, 2, 3}, {5, 5, 5}), std::runtime_error);
  CHECK_THROWS_AS(pearson({1}, {2}), std::invalid_argument);
}
