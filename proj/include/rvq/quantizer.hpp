#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rvq/codebook.hpp"
#include "rvq/graph.hpp"
#include "rvq/types.hpp"

namespace rvq {

enum class AlphaMode { Free, ForcedZero, ForcedOne };

// Residual gate alpha = sigmoid(g), blending the continuous encoder output
// and its quantization: z = alpha * e + (1 - alpha) * q. Forced endpoints
// (alpha in {0,1}) are ablation modes; the gate is constant there.
template <typename S>
struct ResidualGateT {
  VarT<S> g;             // 1x1, or 1xH when per_head
  S penalty_weight = S(1);  // lambda
  AlphaMode mode = AlphaMode::Free;
  bool per_head = false;

  static ResidualGateT create(S g_init, S lambda, AlphaMode mode, int heads = 1,
                              bool per_head = false) {
    ResidualGateT gate;
    gate.g = parameter<S>(MatT<S>::Constant(1, per_head ? heads : 1, g_init));
    gate.penalty_weight = lambda;
    gate.mode = mode;
    gate.per_head = per_head;
    return gate;
  }

  S alpha(Index head = 0) const {
    switch (mode) {
      case AlphaMode::ForcedZero:
        return S(0);
      case AlphaMode::ForcedOne:
        return S(1);
      case AlphaMode::Free:
        break;
    }
    const S gv = g.value()(0, per_head ? head : 0);
    return static_cast<S>(1.0 / (1.0 + std::exp(-static_cast<double>(gv))));
  }
};

using ResidualGate = ResidualGateT<float>;

// Per-head quantization outcome.
template <typename S>
struct QuantizationResultT {
  std::vector<Index> indices;   // chosen code per head
  MatT<S> quantized;            // H x d_head, rows are codebook rows
  MatT<S> combined;             // H x d_head, z = alpha e + (1-alpha) q
  std::vector<double> dist2;    // squared distance to the chosen code
};

using QuantizationResult = QuantizationResultT<float>;

// Quantizes each head of the pre-bottleneck latent against the shared
// codebook and applies the residual combination. Backward is the
// straight-through convention: the gradient arriving at z passes to e as the
// identity (alpha I + (1-alpha) I); the gate, when free, receives the exact
// analytic gradient through alpha = sigmoid(g).
template <typename S>
std::pair<VarT<S>, QuantizationResultT<S>> quantize_combine(const VarT<S>& e,
                                                            const CodebookT<S>& cb,
                                                            const ResidualGateT<S>& gate) {
  if (e.cols() != cb.dim())
    throw std::invalid_argument("quantize_combine: head dimension mismatch with codebook");
  const Index heads = e.rows();

  QuantizationResultT<S> qr;
  qr.quantized.resize(heads, cb.dim());
  qr.combined.resize(heads, cb.dim());
  for (Index h = 0; h < heads; ++h) {
    RowT<S> row = e.value().row(h);
    auto [idx, d2] = nearest_code(row, cb);
    qr.indices.push_back(idx);
    qr.dist2.push_back(d2);
    qr.quantized.row(h) = cb.codes.row(idx);
    const S a = gate.alpha(h);
    qr.combined.row(h) = a * e.value().row(h) + (S(1) - a) * qr.quantized.row(h);
  }

  std::vector<std::shared_ptr<NodeT<S>>> parents = {e.ptr()};
  const bool free_gate = gate.mode == AlphaMode::Free;
  if (free_gate) parents.push_back(gate.g.ptr());
  const bool per_head = gate.per_head;
  MatT<S> quantized = qr.quantized;

  VarT<S> z = detail::record<S>(
      MatT<S>(qr.combined), std::move(parents),
      [free_gate, per_head, quantized](NodeT<S>& n) {
        auto& pe = *n.parents[0];
        if (pe.requires_grad) {
          detail::ensure_grad(pe);
          pe.grad += n.grad;  // straight-through: identity into e
        }
        if (!free_gate) return;
        auto& pg = *n.parents[1];
        if (!pg.requires_grad) return;
        detail::ensure_grad(pg);
        // dz/dalpha = e - q; dalpha/dg = alpha (1 - alpha)
        for (Index h = 0; h < n.value.rows(); ++h) {
          const Index slot = per_head ? h : 0;
          const double gv = static_cast<double>(pg.value(0, slot));
          const double a = 1.0 / (1.0 + std::exp(-gv));
          double acc = 0.0;
          for (Index j = 0; j < n.value.cols(); ++j) {
            const double e_hj = static_cast<double>(pe.value(h, j));
            const double q_hj = static_cast<double>(quantized(h, j));
            acc += static_cast<double>(n.grad(h, j)) * (e_hj - q_hj);
          }
          pg.grad(0, slot) += static_cast<S>(acc * a * (1.0 - a));
        }
      });
  return {z, std::move(qr)};
}

// lambda * alpha^2 (mean over heads for a per-head gate), differentiable in g.
template <typename S>
VarT<S> gate_penalty(const ResidualGateT<S>& gate) {
  if (gate.mode != AlphaMode::Free) {
    const S a = gate.alpha();
    return scalar_constant<S>(gate.penalty_weight * a * a);
  }
  VarT<S> alpha = sigmoid(gate.g);
  VarT<S> sq = square(alpha);
  return scale(mean(sq), gate.penalty_weight);
}

// beta * sum_h ||e_h - stopgrad(q_h)||^2; gradient flows only into e.
template <typename S>
VarT<S> commitment_loss(const VarT<S>& e, const MatT<S>& quantized, S beta) {
  if (e.rows() != quantized.rows() || e.cols() != quantized.cols())
    throw std::invalid_argument("commitment_loss: shape mismatch");
  double acc = 0.0;
  for (Index h = 0; h < e.rows(); ++h)
    for (Index j = 0; j < e.cols(); ++j) {
      const double d = static_cast<double>(e.value()(h, j)) - static_cast<double>(quantized(h, j));
      acc += d * d;
    }
  MatT<S> out(1, 1);
  out(0, 0) = static_cast<S>(static_cast<double>(beta) * acc);
  return detail::record<S>(std::move(out), {e.ptr()}, [quantized, beta](NodeT<S>& n) {
    auto& pe = *n.parents[0];
    if (!pe.requires_grad) return;
    detail::ensure_grad(pe);
    pe.grad += (S(2) * beta * n.grad(0, 0)) * (pe.value - quantized);
  });
}

}  // namespace rvq
