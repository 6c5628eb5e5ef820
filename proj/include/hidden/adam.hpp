#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hidden/linalg.hpp"

namespace hidden {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment state across a fixed list of parameter tensors.
struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<Vec> m, v;
};

// One bias-corrected update over parallel parameter/gradient tensor lists.
// Moment buffers are sized on first use; later calls must pass the same
// shapes.  Any non-finite gradient aborts with a diagnostic.
inline void adam_step(AdamState& state, std::span<std::span<double>> params,
                      std::span<const std::span<const double>> grads, double lr) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: tensor count mismatch");
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw std::invalid_argument("adam_step: learning rate must be positive");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t t = 0; t < params.size(); ++t) {
      state.m[t].assign(params[t].size(), 0.0);
      state.v[t].assign(params[t].size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: tensor count changed across steps");
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size() || params[t].size() != state.m[t].size())
      throw std::invalid_argument("adam_step: tensor shape changed across steps");
    for (std::size_t i = 0; i < grads[t].size(); ++i) {
      if (!std::isfinite(grads[t][i])) {
        std::ostringstream msg;
        msg << "adam_step: non-finite gradient at tensor " << t << " index " << i << " value "
            << grads[t][i];
        throw std::runtime_error(msg.str());
      }
    }
  }

  state.step += 1;
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& m = state.m[t];
    auto& v = state.v[t];
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double g = grads[t][i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      params[t][i] -= lr * mhat / (std::sqrt(vhat) + state.config.epsilon);
    }
  }
}

}  // namespace hidden
