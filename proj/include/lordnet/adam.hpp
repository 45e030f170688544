#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lordnet/errors.hpp"

namespace lordnet {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators, one per parameter tensor, created on the first step.
struct AdamState {
  AdamHyper hyper;
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  long step = 0;
};

/// One bias-corrected Adam update of every tensor in `params` in place.
inline void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                      AdamState& state, double lr) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient counts differ");
  if (state.step == 0 && state.first.empty()) {
    for (const auto& p : params) {
      state.first.emplace_back(p.size(), 0.0);
      state.second.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first.size() != params.size()) throw ShapeError("adam_step: state holds a different number of tensors");
  for (std::size_t t = 0; t < params.size(); ++t)
    if (params[t].size() != grads[t].size() || state.first[t].size() != params[t].size())
      throw ShapeError("adam_step: tensor " + std::to_string(t) + " shape mismatch");

  const auto& h = state.hyper;
  ++state.step;
  const double correction1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& m = state.first[t];
    auto& v = state.second[t];
    const auto p = params[t];
    const auto g = grads[t];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

}  // namespace lordnet
