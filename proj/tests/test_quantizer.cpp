#include <doctest.h>

#include <cmath>

#include "rvq/quantizer.hpp"
#include "rvq/rng.hpp"

using namespace rvq;

namespace {

Codebook two_code_book() {
  Codebook cb = Codebook::create(2, 2);
  cb.codes << 0, 0, 1, 0;
  return cb;
}

Row rowvec(float a, float b) {
  Row r(2);
  r << a, b;
  return r;
}

// Independent brute-force argmin sharing only the distance definition
// (double-accumulated squared Euclidean).
template <typename S>
std::pair<Index, double> brute_force_nearest(const RowT<S>& e, const MatT<S>& codes) {
  Index best = -1;
  double best_d = 0.0;
  for (Index i = 0; i < codes.rows(); ++i) {
    double d = 0.0;
    for (Index j = 0; j < codes.cols(); ++j) {
      const double diff = static_cast<double>(e(0, j)) - static_cast<double>(codes(i, j));
      d += diff * diff;
    }
    if (best < 0 || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return {best, best_d};
}

}  // namespace

TEST_CASE("nearest_code: worked examples and tie-break") {
  Codebook cb = two_code_book();
  auto [i1, d1] = nearest_code(rowvec(0.9f, 0.1f), cb);
  CHECK(i1 == 1);
  CHECK(d1 == doctest::Approx(0.02).epsilon(1e-6));

  auto [i2, d2] = nearest_code(rowvec(0.0f, 0.0f), cb);
  CHECK(i2 == 0);
  CHECK(d2 == 0.0);

  auto [i3, d3] = nearest_code(rowvec(0.5f, 0.0f), cb);  // equidistant
  CHECK(i3 == 0);                                        // lowest index wins
}

TEST_CASE("nearest_code agrees with brute force on random codebooks") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = static_cast<Index>(rng.uniform_int(2, 64));
    const Index d = static_cast<Index>(rng.uniform_int(1, 16));
    Codebook cb = Codebook::create(k, d);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < d; ++j) cb.codes(i, j) = static_cast<float>(rng.normal());
    if (trial % 4 == 0 && k >= 4) cb.codes.row(3) = cb.codes.row(1);  // planted tie
    Row e(d);
    for (Index j = 0; j < d; ++j) e(0, j) = static_cast<float>(rng.normal());
    const auto got = nearest_code(e, cb);
    const auto want = brute_force_nearest(e, cb.codes);
    CHECK(got.first == want.first);
    CHECK(got.second == want.second);
  }
}

TEST_CASE("quantize_combine: endpoints and midpoint arithmetic") {
  Codebook cb = Codebook::create(2, 2);
  cb.codes << 0, 2, 5, 5;
  Mat e(1, 2);
  e << 2, 0;

  ResidualGate g1 = ResidualGate::create(0.0f, 1.0f, AlphaMode::ForcedOne);
  auto [z1, q1] = quantize_combine(parameter(Mat(e)), cb, g1);
  CHECK(z1.value()(0, 0) == 2.0f);  // alpha=1: z == e bit-exactly
  CHECK(z1.value()(0, 1) == 0.0f);

  ResidualGate g0 = ResidualGate::create(0.0f, 1.0f, AlphaMode::ForcedZero);
  auto [z0, q0] = quantize_combine(parameter(Mat(e)), cb, g0);
  CHECK(z0.value()(0, 0) == cb.codes(0, 0));  // alpha=0: z == q bit-exactly
  CHECK(z0.value()(0, 1) == cb.codes(0, 1));
  CHECK(q0.indices[0] == 0);

  ResidualGate gh = ResidualGate::create(0.0f, 1.0f, AlphaMode::Free);  // alpha = 0.5
  auto [zh, qh] = quantize_combine(parameter(Mat(e)), cb, gh);
  CHECK(zh.value()(0, 0) == doctest::Approx(1.0));
  CHECK(zh.value()(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("quantize_combine: straight-through passes the gradient to e unchanged") {
  Rng rng(31);
  Codebook cb = Codebook::create(4, 3);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) cb.codes(i, j) = static_cast<float>(rng.normal());
  Mat e(2, 3);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j) e(i, j) = static_cast<float>(rng.normal());
  Var ve = parameter(Mat(e));
  ResidualGate gate = ResidualGate::create(0.3f, 1.0f, AlphaMode::Free);

  auto [z, qr] = quantize_combine(ve, cb, gate);
  Mat w(3, 1);
  w << 0.5f, -1.0f, 2.0f;
  backward(sum(matmul(z, constant(w))));

  REQUIRE(ve.has_grad());
  REQUIRE(z.has_grad());
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(ve.grad()(i, j) == z.grad()(i, j));  // bit-exact

  // Gate gradient: sum over elements of g_z * (e - q) * alpha(1-alpha).
  const double a = static_cast<double>(gate.alpha());
  double expect = 0.0;
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      expect += static_cast<double>(z.grad()(i, j)) *
                (static_cast<double>(e(i, j)) - static_cast<double>(qr.quantized(i, j)));
  expect *= a * (1.0 - a);
  CHECK(static_cast<double>(gate.g.grad()(0, 0)) == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("gate_penalty: endpoint and arithmetic examples") {
  ResidualGate g0 = ResidualGate::create(0.0f, 1.0f, AlphaMode::ForcedZero);
  CHECK(gate_penalty(g0).scalar() == 0.0f);

  ResidualGate g1 = ResidualGate::create(0.0f, 1.0f, AlphaMode::ForcedOne);
  CHECK(gate_penalty(g1).scalar() == 1.0f);

  ResidualGate gh = ResidualGate::create(0.0f, 2.0f, AlphaMode::Free);  // lambda=2, alpha=0.5
  CHECK(gate_penalty(gh).scalar() == doctest::Approx(0.5));

  // Differentiable in g: d/dg [lambda a^2] = lambda * 2a * a(1-a) = 0.5 here.
  Var pen = gate_penalty(gh);
  backward(pen);
  CHECK(gh.g.grad()(0, 0) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("commitment_loss: values and gradient routing") {
  Mat e(1, 2), q(1, 2);
  e << 1, 0;
  q << 0, 0;

  Var ve = parameter(Mat(e));
  CHECK(commitment_loss(ve, Mat(e), 0.25f).scalar() == 0.0f);  // e == q
  CHECK(commitment_loss(ve, q, 0.0f).scalar() == 0.0f);        // beta = 0
  Var loss = commitment_loss(ve, q, 0.25f);
  CHECK(loss.scalar() == doctest::Approx(0.25));

  backward(loss);
  CHECK(ve.grad()(0, 0) == doctest::Approx(2.0 * 0.25 * 1.0));  // 2 beta (e - q)
  CHECK(ve.grad()(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("ema_update: hand-evaluated recurrence") {
  Codebook cb = Codebook::create(2, 2);
  cb.decay = 0.9f;
  cb.codes.row(0) = rowvec(1, 0);
  cb.sums.row(0) = rowvec(1, 0);
  cb.counts(0, 0) = 1.0f;

  std::vector<std::pair<Index, Row>> batch = {{0, rowvec(0, 0)}, {0, rowvec(0, 2)}};
  ema_update(cb, batch);
  CHECK(cb.counts(0, 0) == doctest::Approx(1.1));
  CHECK(cb.sums(0, 0) == doctest::Approx(0.9));
  CHECK(cb.sums(0, 1) == doctest::Approx(0.2));
  CHECK(cb.codes(0, 0) == doctest::Approx(0.8182).epsilon(1e-3));
  CHECK(cb.codes(0, 1) == doctest::Approx(0.1818).epsilon(1e-3));
}

TEST_CASE("ema_update: empty batch leaves the codebook unchanged by default") {
  Codebook cb = Codebook::create(2, 2);
  cb.codes << 1, 2, 3, 4;
  cb.counts(0, 0) = 0.5f;
  cb.sums.row(0) = rowvec(0.5f, 1.0f);
  const Mat before_codes = cb.codes;
  const Mat before_sums = cb.sums;
  ema_update(cb, {});
  CHECK((cb.codes - before_codes).cwiseAbs().maxCoeff() == 0.0f);
  CHECK((cb.sums - before_sums).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(cb.counts(0, 0) == 0.5f);
  CHECK(cb.unused_steps(0, 0) == 1.0f);

  cb.decay_on_empty = true;
  ema_update(cb, {});
  CHECK(cb.counts(0, 0) == doctest::Approx(0.5 * 0.99));
  CHECK(cb.sums(0, 0) == doctest::Approx(0.5 * 0.99));
}

TEST_CASE("ema_update: codes converge to two cluster means") {
  Rng rng(17);
  const Eigen::Vector2d mean_a(3.0, -1.0), mean_b(-2.0, 2.5);
  Codebook cb = Codebook::create(2, 2);
  cb.codes.row(0) = rowvec(static_cast<float>(mean_a.x()), static_cast<float>(mean_a.y()));
  cb.codes.row(1) = rowvec(static_cast<float>(mean_b.x()), static_cast<float>(mean_b.y()));

  Eigen::Vector2d sum_a = Eigen::Vector2d::Zero(), sum_b = Eigen::Vector2d::Zero();
  long n_a = 0, n_b = 0;
  for (int update = 0; update < 200; ++update) {
    std::vector<std::pair<Index, Row>> batch;
    for (int i = 0; i < 64; ++i) {
      const bool pick_a = rng.uniform() < 0.5;
      const Eigen::Vector2d mu = pick_a ? mean_a : mean_b;
      Row e = rowvec(static_cast<float>(mu.x() + 0.1 * rng.normal()),
                     static_cast<float>(mu.y() + 0.1 * rng.normal()));
      const auto [idx, dist] = nearest_code(e, cb);
      batch.emplace_back(idx, e);
      if (pick_a) {
        sum_a += Eigen::Vector2d(e(0, 0), e(0, 1));
        ++n_a;
      } else {
        sum_b += Eigen::Vector2d(e(0, 0), e(0, 1));
        ++n_b;
      }
    }
    ema_update(cb, batch);
  }
  // Direct averaging oracle over everything drawn.
  const Eigen::Vector2d avg_a = sum_a / static_cast<double>(n_a);
  const Eigen::Vector2d avg_b = sum_b / static_cast<double>(n_b);
  CHECK(std::hypot(cb.codes(0, 0) - avg_a.x(), cb.codes(0, 1) - avg_a.y()) <= 1e-2);
  CHECK(std::hypot(cb.codes(1, 0) - avg_b.x(), cb.codes(1, 1) - avg_b.y()) <= 1e-2);
}

TEST_CASE("ema convergence keeps code norms bounded by the data norm bound") {
  Rng rng(23);
  Codebook cb = Codebook::create(4, 3);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) cb.codes(i, j) = static_cast<float>(rng.normal());
  const double bound = 2.0;
  for (int update = 0; update < 100; ++update) {
    std::vector<std::pair<Index, Row>> batch;
    for (int i = 0; i < 32; ++i) {
      Row e(3);
      do {
        for (Index j = 0; j < 3; ++j) e(0, j) = static_cast<float>(rng.normal());
      } while (e.norm() > bound);
      batch.emplace_back(nearest_code(e, cb).first, e);
    }
    ema_update(cb, batch);
  }
  for (Index i = 0; i < 4; ++i) {
    if (cb.counts(0, i) == 0.0f) continue;  // never assigned
    CHECK(static_cast<double>(cb.codes.row(i).norm()) <= bound + 1e-4);
  }
}

TEST_CASE("dead codes reseed from the replacement pool after the threshold") {
  Rng rng(29);
  Codebook cb = Codebook::create(2, 2);
  cb.codes << 10, 10, 0, 0;
  Mat pool(3, 2);
  pool << 1, 2, 3, 4, 5, 6;
  for (int i = 0; i < 4; ++i) ema_update(cb, {{1, rowvec(0.1f, 0.1f)}});
  CHECK(reseed_dead_codes(cb, pool, 5, rng) == 0);
  ema_update(cb, {{1, rowvec(0.1f, 0.1f)}});
  CHECK(cb.unused_steps(0, 0) == 5.0f);
  CHECK(reseed_dead_codes(cb, pool, 5, rng) == 1);
  bool matches_pool_row = false;
  for (Index r = 0; r < pool.rows(); ++r)
    matches_pool_row = matches_pool_row || (cb.codes(0, 0) == pool(r, 0) &&
                                            cb.codes(0, 1) == pool(r, 1));
  CHECK(matches_pool_row);
  CHECK(cb.counts(0, 0) == 0.0f);
}
