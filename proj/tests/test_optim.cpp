#include <doctest.h>

#include <cmath>

#include "rvq/optim.hpp"
#include "rvq/rng.hpp"

using namespace rvq;

TEST_CASE("adam: zero gradient leaves fresh parameters unchanged") {
  Mat p = Mat::Constant(1, 3, 2.5f);
  Mat g = Mat::Zero(1, 3);
  AdamState st = AdamState::zeros(1, 3);
  adam_step<float>("p", p, g, st, 0.1);
  CHECK(p(0, 0) == 2.5f);
  CHECK(st.step == 1);
}

TEST_CASE("adam: first bias-corrected step moves by about lr") {
  // p=0, g=1, b1=0.9, b2=0.999, eps=1e-8, lr=0.1 -> p ~= -0.1
  Mat p = Mat::Zero(1, 1);
  Mat g = Mat::Ones(1, 1);
  AdamState st = AdamState::zeros(1, 1, {0.9, 0.999, 1e-8});
  adam_step<float>("p", p, g, st, 0.1);
  CHECK(p(0, 0) == doctest::Approx(-0.1).epsilon(1e-4));
}

TEST_CASE("adam: two identical gradients keep the step magnitude stable") {
  Mat p = Mat::Zero(1, 1);
  Mat g = Mat::Ones(1, 1);
  AdamState st = AdamState::zeros(1, 1, {0.9, 0.999, 1e-8});
  adam_step<float>("p", p, g, st, 0.1);
  const double first = std::abs(static_cast<double>(p(0, 0)));
  const double before = static_cast<double>(p(0, 0));
  adam_step<float>("p", p, g, st, 0.1);
  const double second = std::abs(static_cast<double>(p(0, 0)) - before);
  CHECK(second <= first * 1.01);
}

TEST_CASE("adam: NaN gradient names the offending parameter") {
  Mat p = Mat::Zero(1, 2);
  Mat g = Mat::Zero(1, 2);
  g(0, 1) = std::nanf("");
  AdamState st = AdamState::zeros(1, 2);
  CHECK_THROWS_WITH_AS(adam_step<float>("encoder.0.attn.q.w", p, g, st, 0.1),
                       doctest::Contains("encoder.0.attn.q.w"), std::runtime_error);
}

TEST_CASE("adam: update is invariant to a consistent coordinate permutation") {
  Rng rng(3);
  const Index n = 16;
  Mat p(1, n), g(1, n);
  for (Index j = 0; j < n; ++j) {
    p(0, j) = static_cast<float>(rng.normal());
    g(0, j) = static_cast<float>(rng.normal());
  }
  std::vector<Index> perm(n);
  for (Index j = 0; j < n; ++j) perm[static_cast<std::size_t>(j)] = j;
  rng.shuffle(perm);

  Mat p2(1, n), g2(1, n);
  for (Index j = 0; j < n; ++j) {
    p2(0, j) = p(0, perm[static_cast<std::size_t>(j)]);
    g2(0, j) = g(0, perm[static_cast<std::size_t>(j)]);
  }
  AdamState st1 = AdamState::zeros(1, n);
  AdamState st2 = AdamState::zeros(1, n);
  for (int it = 0; it < 3; ++it) {
    adam_step<float>("a", p, g, st1, 0.05);
    adam_step<float>("b", p2, g2, st2, 0.05);
  }
  for (Index j = 0; j < n; ++j)
    CHECK(p2(0, j) == p(0, perm[static_cast<std::size_t>(j)]));
}

TEST_CASE("noam_lr: direct formula evaluation at step 1") {
  // d_model=64, warmup=4000, scale=1 -> ~4.941e-7
  CHECK(noam_lr(1, {64, 4000, 1.0}) == doctest::Approx(4.941058844e-7).epsilon(1e-9));
}

TEST_CASE("noam_lr: the two branches agree at the warmup step") {
  const ScheduleConfig cfg{64, 500, 1.0};
  const double up = 500.0 * std::pow(500.0, -1.5);
  const double down = std::pow(500.0, -0.5);
  CHECK(up == doctest::Approx(down));
  CHECK(noam_lr(500, cfg) == doctest::Approx(std::pow(64.0, -0.5) * down));
}

TEST_CASE("noam_lr: inverse-sqrt decay halves at 4x warmup") {
  const ScheduleConfig cfg{64, 1000, 1.0};
  CHECK(noam_lr(4000, cfg) / noam_lr(1000, cfg) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("noam_lr: step 0 is an error") {
  CHECK_THROWS_AS(noam_lr(0, {64, 4000, 1.0}), std::invalid_argument);
}

TEST_CASE("noam_lr: strictly increasing before warmup, decreasing after") {
  const ScheduleConfig cfg{32, 200, 0.7};
  for (long s = 1; s < 200; ++s) CHECK(noam_lr(s, cfg) < noam_lr(s + 1, cfg));
  for (long s = 200; s < 1000; ++s) CHECK(noam_lr(s, cfg) > noam_lr(s + 1, cfg));
}
