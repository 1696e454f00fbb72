#pragma once

#include <cstdint>
#include <vector>

#include "sgr/autodiff.hpp"

namespace sgr {

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  // Per-parameter update counts; a parameter without a gradient is skipped.
  std::vector<std::int64_t> param_steps;

  explicit AdamState(const ParameterSet& params, double learning_rate = 0.001);
};

// One bias-corrected Adam update over every parameter that has a gradient,
// then clears all gradients. Throws StateError if no parameter has one.
void adam_step(ParameterSet& params, AdamState& state);

// Rescales gradients so their global L2 norm is at most `max_norm`. Returns
// the norm before clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

}  // namespace sgr
