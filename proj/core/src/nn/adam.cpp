#include "musculo/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace musculo::nn {

AdamState AdamState::for_network(const Network& net, AdamConfig config) {
  return {config, net.zeros_like(), net.zeros_like(), 0};
}

namespace {

template <typename Param, typename Moment>
void update_block(Param& p, const Param& g, Moment& m, Moment& v, const AdamConfig& c,
                  double bc1, double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseAbs2();
  p.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace

void adam_step(Network& params, const Network& grads, AdamState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment)) {
    throw std::invalid_argument("adam_step: params/grads/state shape mismatch");
  }
  if (!grads.all_finite()) throw std::domain_error("adam_step: non-finite gradient");

  state.step += 1;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto& p = params.layers[k];
    const auto& g = grads.layers[k];
    auto& m = state.first_moment.layers[k];
    auto& v = state.second_moment.layers[k];
    update_block(p.weight, g.weight, m.weight, v.weight, c, bc1, bc2);
    update_block(p.bias, g.bias, m.bias, v.bias, c, bc1, bc2);
  }
}

}  // namespace musculo::nn
