#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rvq/rng.hpp"
#include "rvq/types.hpp"

namespace rvq {

// K shared code vectors with EMA accumulators: a count N_i and a vector sum
// m_i per code. Whenever a code has history, c_i == m_i / N_i (up to the
// division floor). Codes are moved only by ema_update / reseed, never by
// gradients.
template <typename S>
struct CodebookT {
  MatT<S> codes;          // K x d_head
  RowT<S> counts;         // 1 x K, EMA of assignment counts
  MatT<S> sums;           // K x d_head, EMA of assigned-vector sums
  RowT<S> unused_steps;   // 1 x K, consecutive ema_update calls without an assignment
  S decay = S(0.99);
  S count_floor = S(1e-3);
  bool decay_on_empty = false;

  Index size() const { return codes.rows(); }
  Index dim() const { return codes.cols(); }

  static CodebookT create(Index k, Index d_head, S decay = S(0.99)) {
    if (k < 2) throw std::invalid_argument("codebook: K must be >= 2");
    CodebookT cb;
    cb.codes = MatT<S>::Zero(k, d_head);
    cb.counts = RowT<S>::Zero(k);
    cb.sums = MatT<S>::Zero(k, d_head);
    cb.unused_steps = RowT<S>::Zero(k);
    cb.decay = decay;
    return cb;
  }
};

using Codebook = CodebookT<float>;

// Squared Euclidean distance accumulated in double; this exact formula is
// the tie-break contract shared with the brute-force oracle.
template <typename S>
double code_distance2(const MatT<S>& codes, Index row, const RowT<S>& e) {
  double acc = 0.0;
  for (Index j = 0; j < e.cols(); ++j) {
    const double d = static_cast<double>(e(0, j)) - static_cast<double>(codes(row, j));
    acc += d * d;
  }
  return acc;
}

// argmin_i ||e - c_i||^2, ties broken by lowest index.
template <typename S>
std::pair<Index, double> nearest_code(const RowT<S>& e, const CodebookT<S>& cb) {
  if (e.cols() != cb.dim()) throw std::invalid_argument("nearest_code: dimension mismatch");
  Index best = 0;
  double best_d = code_distance2(cb.codes, 0, e);
  for (Index i = 1; i < cb.size(); ++i) {
    const double d = code_distance2(cb.codes, i, e);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return {best, best_d};
}

// One EMA step over a batch of (code index, encoder head vector) pairs:
//   N_i <- g N_i + (1-g) n_i,   m_i <- g m_i + (1-g) sum_i e,
//   c_i <- m_i / max(N_i, floor)  for codes with history.
// Codes never assigned stay untouched unless decay_on_empty is set.
template <typename S>
void ema_update(CodebookT<S>& cb, const std::vector<std::pair<Index, RowT<S>>>& assignments) {
  const Index k = cb.size();
  std::vector<double> batch_count(static_cast<std::size_t>(k), 0.0);
  MatT<double> batch_sum = MatT<double>::Zero(k, cb.dim());
  for (const auto& [idx, e] : assignments) {
    if (idx < 0 || idx >= k) throw std::invalid_argument("ema_update: code index out of range");
    if (e.cols() != cb.dim()) throw std::invalid_argument("ema_update: vector dimension mismatch");
    batch_count[static_cast<std::size_t>(idx)] += 1.0;
    batch_sum.row(idx) += e.template cast<double>();
  }
  const S g = cb.decay;
  for (Index i = 0; i < k; ++i) {
    const double n_i = batch_count[static_cast<std::size_t>(i)];
    const bool touched = n_i > 0.0;
    cb.unused_steps(0, i) = touched ? S(0) : cb.unused_steps(0, i) + S(1);
    if (!touched && !cb.decay_on_empty) continue;
    cb.counts(0, i) = g * cb.counts(0, i) + (S(1) - g) * static_cast<S>(n_i);
    cb.sums.row(i) = g * cb.sums.row(i) + (S(1) - g) * batch_sum.row(i).template cast<S>();
    if (cb.counts(0, i) > S(0)) {
      cb.codes.row(i) = cb.sums.row(i) / std::max(cb.counts(0, i), cb.count_floor);
    }
  }
}

// Gaussian init scaled to the RMS of a warmup batch of encoder head outputs.
template <typename S>
void init_codebook(CodebookT<S>& cb, const MatT<S>& warmup_vectors, Rng& rng) {
  double rms = 1.0;
  if (warmup_vectors.size() > 0) {
    double acc = 0.0;
    for (Index i = 0; i < warmup_vectors.rows(); ++i)
      for (Index j = 0; j < warmup_vectors.cols(); ++j)
        acc += static_cast<double>(warmup_vectors(i, j)) * static_cast<double>(warmup_vectors(i, j));
    rms = std::sqrt(acc / static_cast<double>(warmup_vectors.size()));
    if (!(rms > 0.0)) rms = 1.0;
  }
  for (Index i = 0; i < cb.size(); ++i)
    for (Index j = 0; j < cb.dim(); ++j) cb.codes(i, j) = static_cast<S>(rng.normal(0.0, rms));
  cb.counts.setZero();
  cb.sums.setZero();
  cb.unused_steps.setZero();
}

// Reseeds codes whose unused_steps reached `threshold` from rows of
// `replacement_pool` (encoder outputs of the current batch). Returns the
// number of reseeded codes.
template <typename S>
int reseed_dead_codes(CodebookT<S>& cb, const MatT<S>& replacement_pool, int threshold, Rng& rng) {
  if (replacement_pool.rows() == 0) return 0;
  int reseeded = 0;
  for (Index i = 0; i < cb.size(); ++i) {
    if (cb.unused_steps(0, i) < static_cast<S>(threshold)) continue;
    const Index pick = static_cast<Index>(rng.index(static_cast<std::size_t>(replacement_pool.rows())));
    cb.codes.row(i) = replacement_pool.row(pick);
    cb.counts(0, i) = S(0);
    cb.sums.row(i).setZero();
    cb.unused_steps(0, i) = S(0);
    ++reseeded;
  }
  return reseeded;
}

}  // namespace rvq
