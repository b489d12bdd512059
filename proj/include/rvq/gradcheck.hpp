#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rvq/graph.hpp"
#include "rvq/rng.hpp"

namespace rvq {

// Central-difference verification of the recorded-graph backward pass.
// `loss_fn` must rebuild the graph from the given leaf parameters on every
// call and be deterministic; at most `max_coords` coordinates are sampled
// per parameter with a fixed seed.
//
// Returns max over sampled coordinates of
//   |analytic - central| / (|analytic| + |central| + 1e-12).
template <typename S>
double finite_difference_check(const std::function<VarT<S>()>& loss_fn,
                               const std::vector<VarT<S>>& params, double epsilon,
                               int max_coords = 200, std::uint64_t seed = 42) {
  if (!(epsilon > 1e-6 && epsilon < 1e-2))
    throw std::invalid_argument("finite_difference_check: epsilon must lie in (1e-6, 1e-2)");

  const auto eval = [&loss_fn]() {
    NoGradGuard ng;
    return static_cast<double>(loss_fn().scalar());
  };
  if (eval() != eval())
    throw std::runtime_error("finite_difference_check: loss is non-deterministic");

  VarT<S> out = loss_fn();
  backward(out);
  std::vector<MatT<S>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());

  Rng rng(seed);
  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    MatT<S>& data = params[pi].node().value;
    const Index n = data.size();
    std::vector<Index> coords(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
    if (n > max_coords) {
      rng.shuffle(coords);
      coords.resize(static_cast<std::size_t>(max_coords));
    }
    for (Index c : coords) {
      S* cell = data.data() + c;
      const S saved = *cell;
      const S xp = static_cast<S>(static_cast<double>(saved) + epsilon);
      const S xm = static_cast<S>(static_cast<double>(saved) - epsilon);
      *cell = xp;
      const double fp = eval();
      *cell = xm;
      const double fm = eval();
      *cell = saved;
      const double h = static_cast<double>(xp) - static_cast<double>(xm);
      const double central = (fp - fm) / h;
      const double a = static_cast<double>(analytic[pi](c / data.cols(), c % data.cols()));
      const double rel = std::abs(a - central) / (std::abs(a) + std::abs(central) + 1e-12);
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

}  // namespace rvq
