#include "sgr/optim.hpp"

#include <cmath>

#include "sgr/errors.hpp"

namespace sgr {

AdamState::AdamState(const ParameterSet& params, double learning_rate) : lr(learning_rate) {
  first_moment = params.gradient_buffers();
  second_moment = params.gradient_buffers();
  param_steps.assign(params.size(), 0);
}

void adam_step(ParameterSet& params, AdamState& state) {
  if (state.first_moment.size() != params.size()) {
    throw StateError("optimizer state does not match parameter set");
  }
  bool any = false;
  for (const auto& p : params) any = any || p.has_grad;
  if (!any) throw StateError("adam_step called without gradients");

  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.has_grad) continue;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (!m.same_shape(p.value) || !p.grad.same_shape(p.value)) {
      throw StateError("moment buffer shape mismatch for " + p.name);
    }
    const auto t = static_cast<double>(++state.param_steps[i]);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data[k];
      m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * g;
      v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = m.data[k] / c1;
      const double v_hat = v.data[k] / c2;
      p.value.data[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
  params.zero_grad();
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  const double norm = params.grad_norm();
  if (norm > max_norm && norm > 0.0) params.scale_grad(max_norm / norm);
  return norm;
}

}  // namespace sgr
