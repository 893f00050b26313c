#pragma once

#include <cstdint>

#include "musculo/nn/network.hpp"

namespace musculo::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Network first_moment;
  Network second_moment;
  std::uint64_t step = 0;

  static AdamState for_network(const Network& net, AdamConfig config = {});
};

/// One bias-corrected Adam update of `params` in place. Throws
/// std::invalid_argument on shape mismatch and std::domain_error on
/// non-finite gradients (params and state are left untouched).
void adam_step(Network& params, const Network& grads, AdamState& state);

}  // namespace musculo::nn
