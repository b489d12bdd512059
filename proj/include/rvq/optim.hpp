#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "rvq/types.hpp"

namespace rvq {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

template <typename S>
struct AdamStateT {
  MatT<S> m;  // first moment, parameter-shaped
  MatT<S> v;  // second moment
  long step = 0;
  AdamConfig cfg;

  static AdamStateT zeros(Index rows, Index cols, AdamConfig cfg = {}) {
    AdamStateT st;
    st.m = MatT<S>::Zero(rows, cols);
    st.v = MatT<S>::Zero(rows, cols);
    st.cfg = cfg;
    return st;
  }
};

using AdamState = AdamStateT<float>;

// Bias-corrected Adam update, applied in place.
template <typename S>
void adam_step(const std::string& name, MatT<S>& param, const MatT<S>& grad,
               AdamStateT<S>& state, double learning_rate) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw std::invalid_argument("adam_step: parameter/gradient shape mismatch for " + name);
  if (param.rows() != state.m.rows() || param.cols() != state.m.cols())
    throw std::invalid_argument("adam_step: state shape mismatch for " + name);
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("adam_step: learning rate must be finite and positive");
  if (!grad.allFinite())
    throw std::runtime_error("adam_step: NaN or Inf gradient in parameter " + name);

  state.step += 1;
  const S b1 = static_cast<S>(state.cfg.beta1);
  const S b2 = static_cast<S>(state.cfg.beta2);
  state.m = b1 * state.m + (S(1) - b1) * grad;
  state.v = (b2 * state.v).eval() + (S(1) - b2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
  const S step_size = static_cast<S>(learning_rate / bc1);
  const S denom_scale = static_cast<S>(1.0 / std::sqrt(bc2));
  param.array() -= step_size * state.m.array() /
                   (state.v.array().sqrt() * denom_scale + static_cast<S>(state.cfg.eps));
}

struct ScheduleConfig {
  int d_model = 64;
  int warmup_steps = 4000;
  double scale = 1.0;
};

// scale * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)
inline double noam_lr(long step, const ScheduleConfig& cfg) {
  if (step < 1) throw std::invalid_argument("noam_lr: step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(cfg.warmup_steps);
  return cfg.scale * std::pow(static_cast<double>(cfg.d_model), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

}  // namespace rvq
