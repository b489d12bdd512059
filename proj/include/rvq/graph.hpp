#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rvq/types.hpp"

namespace rvq {

// Reverse-mode engine over dense row-major matrices. A graph is recorded
// dynamically per forward pass; nodes own their value and (after backward)
// their gradient. Children hold shared_ptrs to parents, so releasing the
// output frees the transient graph while leaf parameters survive in the
// model that owns them.
//
// Reductions (sum, mean, dot, softmax denominators, norm-style folds)
// accumulate in double regardless of the storage scalar.

template <typename S>
struct NodeT {
  MatT<S> value;
  MatT<S> grad;  // empty until backward touches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<NodeT<S>>> parents;
  std::function<void(NodeT<S>&)> backprop;  // scatters this->grad into parents
};

// Cheap value-semantics handle to a graph node.
template <typename S>
class VarT {
 public:
  VarT() = default;
  explicit VarT(std::shared_ptr<NodeT<S>> n) : node_(std::move(n)) {}

  bool defined() const { return node_ != nullptr; }
  NodeT<S>& node() const { return *node_; }
  const std::shared_ptr<NodeT<S>>& ptr() const { return node_; }

  const MatT<S>& value() const { return node_->value; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  S scalar() const { return node_->value(0, 0); }
  bool requires_grad() const { return node_->requires_grad; }

  bool has_grad() const { return node_->grad.size() > 0; }
  const MatT<S>& grad_ref() const {
    if (!has_grad()) throw std::logic_error("grad_ref: gradient not populated");
    return node_->grad;
  }
  // Disconnected nodes read as zero gradient.
  MatT<S> grad() const {
    if (has_grad()) return node_->grad;
    return MatT<S>::Zero(rows(), cols());
  }

 private:
  std::shared_ptr<NodeT<S>> node_;
};

using Var = VarT<float>;

namespace detail {

inline thread_local bool grad_mode_enabled = true;

template <typename S>
void ensure_grad(NodeT<S>& n) {
  if (n.grad.size() == 0) n.grad = MatT<S>::Zero(n.value.rows(), n.value.cols());
}

template <typename S>
std::shared_ptr<NodeT<S>> make_node(MatT<S> value) {
  auto n = std::make_shared<NodeT<S>>();
  n->value = std::move(value);
  return n;
}

// Records parents/backprop only when gradients can flow.
template <typename S>
VarT<S> record(MatT<S> value, std::vector<std::shared_ptr<NodeT<S>>> parents,
               std::function<void(NodeT<S>&)> backprop) {
  auto n = make_node(std::move(value));
  if (grad_mode_enabled) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    if (needs) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backprop = std::move(backprop);
    }
  }
  return VarT<S>(n);
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

// Disables graph recording for the current scope (inference paths).
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_mode_enabled) { detail::grad_mode_enabled = false; }
  ~NoGradGuard() { detail::grad_mode_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename S>
VarT<S> constant(MatT<S> v) {
  return VarT<S>(detail::make_node(std::move(v)));
}

template <typename S>
VarT<S> parameter(MatT<S> v) {
  auto n = detail::make_node(std::move(v));
  n->requires_grad = true;
  return VarT<S>(n);
}

// Expression-friendly overloads: any dense Eigen expression materializes
// into the node's storage.
template <typename Derived>
VarT<typename Derived::Scalar> constant(const Eigen::MatrixBase<Derived>& v) {
  return constant(MatT<typename Derived::Scalar>(v));
}

template <typename Derived>
VarT<typename Derived::Scalar> parameter(const Eigen::MatrixBase<Derived>& v) {
  return parameter(MatT<typename Derived::Scalar>(v));
}

template <typename S>
VarT<S> scalar_constant(S v) {
  MatT<S> m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

// ---------------------------------------------------------------------------
// elementwise / broadcast
// ---------------------------------------------------------------------------

// add supports a row-vector second operand broadcast over the rows of the
// first (bias add); otherwise shapes must match.
template <typename S>
VarT<S> add(const VarT<S>& a, const VarT<S>& b) {
  const bool broadcast = b.rows() == 1 && a.rows() > 1 && a.cols() == b.cols();
  detail::check(broadcast || (a.rows() == b.rows() && a.cols() == b.cols()), "add: shape mismatch");
  MatT<S> out = broadcast ? MatT<S>(a.value().rowwise() + b.value().row(0)) : MatT<S>(a.value() + b.value());
  return detail::record<S>(std::move(out), {a.ptr(), b.ptr()}, [broadcast](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      detail::ensure_grad(pa);
      pa.grad += n.grad;
    }
    if (pb.requires_grad) {
      detail::ensure_grad(pb);
      if (broadcast) {
        pb.grad.row(0) += n.grad.colwise().sum();
      } else {
        pb.grad += n.grad;
      }
    }
  });
}

template <typename S>
VarT<S> add_many(const std::vector<VarT<S>>& xs) {
  detail::check(!xs.empty(), "add_many: empty operand list");
  MatT<S> out = xs[0].value();
  std::vector<std::shared_ptr<NodeT<S>>> parents;
  parents.reserve(xs.size());
  for (const auto& x : xs) {
    detail::check(x.rows() == xs[0].rows() && x.cols() == xs[0].cols(), "add_many: shape mismatch");
    parents.push_back(x.ptr());
  }
  for (std::size_t i = 1; i < xs.size(); ++i) out += xs[i].value();
  return detail::record<S>(std::move(out), std::move(parents), [](NodeT<S>& n) {
    for (auto& p : n.parents) {
      if (!p->requires_grad) continue;
      detail::ensure_grad(*p);
      p->grad += n.grad;
    }
  });
}

template <typename S>
VarT<S> sub(const VarT<S>& a, const VarT<S>& b) {
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  return detail::record<S>(MatT<S>(a.value() - b.value()), {a.ptr(), b.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      detail::ensure_grad(pa);
      pa.grad += n.grad;
    }
    if (pb.requires_grad) {
      detail::ensure_grad(pb);
      pb.grad -= n.grad;
    }
  });
}

template <typename S>
VarT<S> mul(const VarT<S>& a, const VarT<S>& b) {
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  return detail::record<S>(MatT<S>(a.value().cwiseProduct(b.value())), {a.ptr(), b.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      detail::ensure_grad(pa);
      pa.grad += n.grad.cwiseProduct(pb.value);
    }
    if (pb.requires_grad) {
      detail::ensure_grad(pb);
      pb.grad += n.grad.cwiseProduct(pa.value);
    }
  });
}

template <typename S>
VarT<S> scale(const VarT<S>& a, S c) {
  return detail::record<S>(MatT<S>(a.value() * c), {a.ptr()}, [c](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    pa.grad += n.grad * c;
  });
}

template <typename S>
VarT<S> square(const VarT<S>& a) {
  return detail::record<S>(MatT<S>(a.value().cwiseProduct(a.value())), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    pa.grad += S(2) * n.grad.cwiseProduct(pa.value);
  });
}

template <typename S>
VarT<S> relu(const VarT<S>& a) {
  return detail::record<S>(MatT<S>(a.value().cwiseMax(S(0))), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    pa.grad.array() += n.grad.array() * (pa.value.array() > S(0)).template cast<S>();
  });
}

template <typename S>
VarT<S> sigmoid(const VarT<S>& a) {
  MatT<S> y = a.value().unaryExpr([](S x) {
    const double v = 1.0 / (1.0 + std::exp(-static_cast<double>(x)));
    return static_cast<S>(v);
  });
  return detail::record<S>(std::move(y), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    pa.grad.array() += n.grad.array() * n.value.array() * (S(1) - n.value.array());
  });
}

template <typename S>
VarT<S> tanh(const VarT<S>& a) {
  MatT<S> y = a.value().unaryExpr([](S x) { return static_cast<S>(std::tanh(static_cast<double>(x))); });
  return detail::record<S>(std::move(y), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    pa.grad.array() += n.grad.array() * (S(1) - n.value.array().square());
  });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

template <typename S>
VarT<S> matmul(const VarT<S>& a, const VarT<S>& b) {
  detail::check(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  return detail::record<S>(MatT<S>(a.value() * b.value()), {a.ptr(), b.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      detail::ensure_grad(pa);
      pa.grad.noalias() += n.grad * pb.value.transpose();
    }
    if (pb.requires_grad) {
      detail::ensure_grad(pb);
      pb.grad.noalias() += pa.value.transpose() * n.grad;
    }
  });
}

template <typename S>
VarT<S> transpose(const VarT<S>& a) {
  return detail::record<S>(MatT<S>(a.value().transpose()), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    pa.grad += n.grad.transpose();
  });
}

// Row-major reshape (same element order, new extents).
template <typename S>
VarT<S> reshape(const VarT<S>& a, Index rows, Index cols) {
  detail::check(rows * cols == a.rows() * a.cols(), "reshape: element count mismatch");
  MatT<S> out(rows, cols);
  Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> flat(a.value().data(), a.value().size());
  Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(out.data(), out.size()) = flat;
  return detail::record<S>(std::move(out), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> gflat(n.grad.data(), n.grad.size());
    Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(pa.grad.data(), pa.grad.size()) += gflat;
  });
}

template <typename S>
VarT<S> concat_rows(const VarT<S>& a, const VarT<S>& b) {
  detail::check(a.cols() == b.cols(), "concat_rows: column mismatch");
  MatT<S> out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a.value();
  out.bottomRows(b.rows()) = b.value();
  const Index ra = a.rows();
  return detail::record<S>(std::move(out), {a.ptr(), b.ptr()}, [ra](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      detail::ensure_grad(pa);
      pa.grad += n.grad.topRows(ra);
    }
    if (pb.requires_grad) {
      detail::ensure_grad(pb);
      pb.grad += n.grad.bottomRows(n.grad.rows() - ra);
    }
  });
}

template <typename S>
VarT<S> slice_rows(const VarT<S>& a, Index start, Index count) {
  detail::check(start >= 0 && count >= 1 && start + count <= a.rows(), "slice_rows: out of range");
  return detail::record<S>(MatT<S>(a.value().middleRows(start, count)), {a.ptr()},
                           [start, count](NodeT<S>& n) {
                             auto& pa = *n.parents[0];
                             if (!pa.requires_grad) return;
                             detail::ensure_grad(pa);
                             pa.grad.middleRows(start, count) += n.grad;
                           });
}

template <typename S>
VarT<S> slice_cols(const VarT<S>& a, Index start, Index count) {
  detail::check(start >= 0 && count >= 1 && start + count <= a.cols(), "slice_cols: out of range");
  return detail::record<S>(MatT<S>(a.value().middleCols(start, count)), {a.ptr()},
                           [start, count](NodeT<S>& n) {
                             auto& pa = *n.parents[0];
                             if (!pa.requires_grad) return;
                             detail::ensure_grad(pa);
                             pa.grad.middleCols(start, count) += n.grad;
                           });
}

template <typename S>
VarT<S> concat_cols(const std::vector<VarT<S>>& parts) {
  detail::check(!parts.empty(), "concat_cols: empty operand list");
  Index total = 0;
  std::vector<std::shared_ptr<NodeT<S>>> parents;
  for (const auto& p : parts) {
    detail::check(p.rows() == parts[0].rows(), "concat_cols: row mismatch");
    total += p.cols();
    parents.push_back(p.ptr());
  }
  MatT<S> out(parts[0].rows(), total);
  Index at = 0;
  std::vector<Index> widths;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    widths.push_back(p.cols());
    at += p.cols();
  }
  return detail::record<S>(std::move(out), std::move(parents), [widths](NodeT<S>& n) {
    Index at = 0;
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      auto& p = *n.parents[i];
      if (p.requires_grad) {
        detail::ensure_grad(p);
        p.grad += n.grad.middleCols(at, widths[i]);
      }
      at += widths[i];
    }
  });
}

// Gathers rows of an embedding table; backward scatter-adds.
template <typename S>
VarT<S> embedding(const VarT<S>& table, const std::vector<int>& ids) {
  detail::check(!ids.empty(), "embedding: empty id list");
  MatT<S> out(static_cast<Index>(ids.size()), table.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    detail::check(ids[t] >= 0 && ids[t] < table.rows(), "embedding: id out of range");
    out.row(static_cast<Index>(t)) = table.value().row(ids[t]);
  }
  return detail::record<S>(std::move(out), {table.ptr()}, [ids](NodeT<S>& n) {
    auto& pt = *n.parents[0];
    if (!pt.requires_grad) return;
    detail::ensure_grad(pt);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      pt.grad.row(ids[t]) += n.grad.row(static_cast<Index>(t));
    }
  });
}

// ---------------------------------------------------------------------------
// reductions (double accumulation)
// ---------------------------------------------------------------------------

template <typename S>
VarT<S> sum(const VarT<S>& a) {
  double acc = 0.0;
  const auto& v = a.value();
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < v.cols(); ++j) acc += static_cast<double>(v(i, j));
  MatT<S> out(1, 1);
  out(0, 0) = static_cast<S>(acc);
  return detail::record<S>(std::move(out), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    pa.grad.array() += n.grad(0, 0);
  });
}

template <typename S>
VarT<S> mean(const VarT<S>& a) {
  const S inv = S(1) / static_cast<S>(a.rows() * a.cols());
  return scale(sum(a), inv);
}

template <typename S>
VarT<S> dot(const VarT<S>& a, const VarT<S>& b) {
  detail::check(a.rows() == b.rows() && a.cols() == b.cols(), "dot: shape mismatch");
  double acc = 0.0;
  const auto& va = a.value();
  const auto& vb = b.value();
  for (Index i = 0; i < va.rows(); ++i)
    for (Index j = 0; j < va.cols(); ++j)
      acc += static_cast<double>(va(i, j)) * static_cast<double>(vb(i, j));
  MatT<S> out(1, 1);
  out(0, 0) = static_cast<S>(acc);
  return detail::record<S>(std::move(out), {a.ptr(), b.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    const S g = n.grad(0, 0);
    if (pa.requires_grad) {
      detail::ensure_grad(pa);
      pa.grad += g * pb.value;
    }
    if (pb.requires_grad) {
      detail::ensure_grad(pb);
      pb.grad += g * pa.value;
    }
  });
}

// ---------------------------------------------------------------------------
// row-wise nonlinear blocks
// ---------------------------------------------------------------------------

template <typename S>
VarT<S> softmax_rows(const VarT<S>& a) {
  const auto& x = a.value();
  MatT<S> y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double m = static_cast<double>(x.row(i).maxCoeff());
    double denom = 0.0;
    for (Index j = 0; j < x.cols(); ++j) denom += std::exp(static_cast<double>(x(i, j)) - m);
    for (Index j = 0; j < x.cols(); ++j)
      y(i, j) = static_cast<S>(std::exp(static_cast<double>(x(i, j)) - m) / denom);
  }
  return detail::record<S>(std::move(y), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    for (Index i = 0; i < n.value.rows(); ++i) {
      double gy = 0.0;
      for (Index j = 0; j < n.value.cols(); ++j)
        gy += static_cast<double>(n.grad(i, j)) * static_cast<double>(n.value(i, j));
      for (Index j = 0; j < n.value.cols(); ++j)
        pa.grad(i, j) += n.value(i, j) * (n.grad(i, j) - static_cast<S>(gy));
    }
  });
}

template <typename S>
VarT<S> log_softmax_rows(const VarT<S>& a) {
  const auto& x = a.value();
  MatT<S> y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double m = static_cast<double>(x.row(i).maxCoeff());
    double denom = 0.0;
    for (Index j = 0; j < x.cols(); ++j) denom += std::exp(static_cast<double>(x(i, j)) - m);
    const double lse = m + std::log(denom);
    for (Index j = 0; j < x.cols(); ++j) y(i, j) = static_cast<S>(static_cast<double>(x(i, j)) - lse);
  }
  return detail::record<S>(std::move(y), {a.ptr()}, [](NodeT<S>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    detail::ensure_grad(pa);
    for (Index i = 0; i < n.value.rows(); ++i) {
      double gsum = 0.0;
      for (Index j = 0; j < n.value.cols(); ++j) gsum += static_cast<double>(n.grad(i, j));
      for (Index j = 0; j < n.value.cols(); ++j) {
        const S p = static_cast<S>(std::exp(static_cast<double>(n.value(i, j))));
        pa.grad(i, j) += n.grad(i, j) - p * static_cast<S>(gsum);
      }
    }
  });
}

// Per-row layer normalization with learnable gain/bias (both 1 x cols).
template <typename S>
VarT<S> layer_norm(const VarT<S>& x, const VarT<S>& gain, const VarT<S>& bias, S eps = S(1e-5)) {
  detail::check(gain.rows() == 1 && gain.cols() == x.cols(), "layer_norm: gain shape");
  detail::check(bias.rows() == 1 && bias.cols() == x.cols(), "layer_norm: bias shape");
  const auto& v = x.value();
  const Index rows = v.rows(), cols = v.cols();
  MatT<S> xhat(rows, cols);
  std::vector<S> inv_std(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) {
    double mu = 0.0;
    for (Index j = 0; j < cols; ++j) mu += static_cast<double>(v(i, j));
    mu /= cols;
    double var = 0.0;
    for (Index j = 0; j < cols; ++j) {
      const double d = static_cast<double>(v(i, j)) - mu;
      var += d * d;
    }
    var /= cols;
    const double istd = 1.0 / std::sqrt(var + static_cast<double>(eps));
    inv_std[static_cast<std::size_t>(i)] = static_cast<S>(istd);
    for (Index j = 0; j < cols; ++j)
      xhat(i, j) = static_cast<S>((static_cast<double>(v(i, j)) - mu) * istd);
  }
  MatT<S> out = ((xhat.array().rowwise() * gain.value().row(0).array()).rowwise() +
                 bias.value().row(0).array())
                    .matrix();
  return detail::record<S>(std::move(out), {x.ptr(), gain.ptr(), bias.ptr()},
                           [xhat, inv_std](NodeT<S>& n) {
                             auto& px = *n.parents[0];
                             auto& pg = *n.parents[1];
                             auto& pb = *n.parents[2];
                             const Index rows = n.value.rows(), cols = n.value.cols();
                             if (pg.requires_grad) {
                               detail::ensure_grad(pg);
                               pg.grad.row(0) += (n.grad.array() * xhat.array()).colwise().sum().matrix();
                             }
                             if (pb.requires_grad) {
                               detail::ensure_grad(pb);
                               pb.grad.row(0) += n.grad.colwise().sum();
                             }
                             if (!px.requires_grad) return;
                             detail::ensure_grad(px);
                             for (Index i = 0; i < rows; ++i) {
                               double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                               for (Index j = 0; j < cols; ++j) {
                                 const double dxh = static_cast<double>(n.grad(i, j)) *
                                                    static_cast<double>(pg.value(0, j));
                                 mean_dxhat += dxh;
                                 mean_dxhat_xhat += dxh * static_cast<double>(xhat(i, j));
                               }
                               mean_dxhat /= cols;
                               mean_dxhat_xhat /= cols;
                               const double istd = static_cast<double>(inv_std[static_cast<std::size_t>(i)]);
                               for (Index j = 0; j < cols; ++j) {
                                 const double dxh = static_cast<double>(n.grad(i, j)) *
                                                    static_cast<double>(pg.value(0, j));
                                 px.grad(i, j) += static_cast<S>(
                                     istd * (dxh - mean_dxhat -
                                             static_cast<double>(xhat(i, j)) * mean_dxhat_xhat));
                               }
                             }
                           });
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

// Fused cross-entropy over softmax(logits): -sum_t log p_t[targets[t]].
// Row t of logits scores the token at position t.
template <typename S>
VarT<S> nll_sum(const VarT<S>& logits, const std::vector<int>& targets) {
  detail::check(logits.rows() == static_cast<Index>(targets.size()),
                "nll_sum: logits/targets length mismatch");
  const auto& x = logits.value();
  MatT<S> probs(x.rows(), x.cols());
  double loss = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    detail::check(targets[static_cast<std::size_t>(i)] >= 0 &&
                      targets[static_cast<std::size_t>(i)] < x.cols(),
                  "nll_sum: target id out of range");
    const double m = static_cast<double>(x.row(i).maxCoeff());
    double denom = 0.0;
    for (Index j = 0; j < x.cols(); ++j) denom += std::exp(static_cast<double>(x(i, j)) - m);
    const double lse = m + std::log(denom);
    for (Index j = 0; j < x.cols(); ++j)
      probs(i, j) = static_cast<S>(std::exp(static_cast<double>(x(i, j)) - lse));
    loss -= static_cast<double>(x(i, targets[static_cast<std::size_t>(i)])) - lse;
  }
  MatT<S> out(1, 1);
  out(0, 0) = static_cast<S>(loss);
  return detail::record<S>(std::move(out), {logits.ptr()}, [probs, targets](NodeT<S>& n) {
    auto& pl = *n.parents[0];
    if (!pl.requires_grad) return;
    detail::ensure_grad(pl);
    const S g = n.grad(0, 0);
    pl.grad += g * probs;
    for (Index i = 0; i < pl.grad.rows(); ++i)
      pl.grad(i, targets[static_cast<std::size_t>(i)]) -= g;
  });
}

// Mean per-token negative log-likelihood (the training module's nll_loss).
template <typename S>
VarT<S> nll_loss(const VarT<S>& logits, const std::vector<int>& targets) {
  return scale(nll_sum(logits, targets), S(1) / static_cast<S>(targets.size()));
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

// Populates gradients of every node reachable from `output` (which must be
// scalar). Gradients of prior backward calls on the same leaves are reset.
template <typename S>
void backward(const VarT<S>& output) {
  detail::check(output.defined(), "backward: undefined output");
  if (output.rows() != 1 || output.cols() != 1)
    throw std::invalid_argument("backward: output must be a scalar");

  // Iterative post-order over parents.
  std::vector<NodeT<S>*> topo;
  std::unordered_set<NodeT<S>*> visited;
  struct Frame {
    NodeT<S>* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  if (output.node().requires_grad) {
    stack.push_back({&output.node(), 0});
    visited.insert(&output.node());
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      NodeT<S>* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  for (NodeT<S>* n : topo) n->grad = MatT<S>::Zero(n->value.rows(), n->value.cols());
  if (topo.empty()) return;  // constant output: nothing reachable
  output.node().grad(0, 0) = S(1);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

}  // namespace rvq
