#include "musculo/rmae/latent_descent.hpp"

#include <cmath>
#include <stdexcept>

#include "musculo/nn/network.hpp"

namespace musculo {

std::vector<double> gamma_grid(const DescentConfig& cfg) {
  if (cfg.n_batch <= 0 || !(cfg.gamma_max > 0.0)) {
    throw std::invalid_argument("DescentConfig: gamma_max and n_batch must be positive");
  }
  std::vector<double> g(static_cast<std::size_t>(cfg.n_batch) + 1);
  for (int k = 0; k <= cfg.n_batch; ++k) {
    g[static_cast<std::size_t>(k)] = cfg.gamma_max * k / cfg.n_batch;
  }
  return g;
}

std::vector<LatentState> descent_candidates(const LatentState& z, const Vector& gradient,
                                            const DescentConfig& cfg) {
  const double norm = gradient.norm();
  std::vector<LatentState> out;
  for (const double gamma : gamma_grid(cfg)) {
    if (norm == 0.0) {
      out.push_back(z);
    } else {
      out.push_back({z.z - (gamma / norm) * gradient});
    }
  }
  return out;
}

LatentState latent_descend(const RmaeModel& model, const LatentState& z0,
                           const LatentObjective& loss, const DescentConfig& cfg,
                           DescentTrace* trace) {
  if (cfg.n_epoch < 0) throw std::invalid_argument("DescentConfig: negative n_epoch");
  if (!(cfg.stall_shrink > 0.0 && cfg.stall_shrink <= 1.0)) {
    throw std::invalid_argument("DescentConfig: stall_shrink must be in (0, 1]");
  }
  if (z0.z.size() != model.latent_dim()) {
    throw std::invalid_argument("latent_descend: z0 has the wrong dimension");
  }
  const int d = model.joints();
  const int m = model.muscles();
  const auto& dec = model.decoder();
  const auto gammas = gamma_grid(cfg);

  DescentTrace local;
  LatentState z = z0;
  double current = 0.0;
  double scale = 1.0;
  for (int epoch = 0; epoch < cfg.n_epoch; ++epoch) {
    auto fwd = nn::forward(dec, Matrix(z.z));
    SensorTriple grad_out = SensorTriple::zeros(d, m);
    const double here = loss(unflatten(fwd.output.col(0), d, m), &grad_out);
    if (!std::isfinite(here)) {
      throw std::domain_error("latent_descend: loss is not finite at the current latent");
    }
    // the batched and single-column paths can differ in the last bits, so
    // later epochs keep the loss that selected z
    if (epoch == 0) current = local.initial_loss = here;
    const Matrix g = nn::backward_input(fwd.tape, dec, Matrix(flatten(grad_out)));
    const Vector gz = g.col(0);
    if (gz.norm() == 0.0) {
      local.stationary = true;
      break;
    }

    Matrix batch(z.z.size(), static_cast<Eigen::Index>(gammas.size()));
    const Vector step = gz / gz.norm();
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      batch.col(static_cast<Eigen::Index>(k)) = z.z - scale * gammas[k] * step;
    }
    const Matrix decoded = nn::evaluate(dec, batch);
    std::size_t best = 0;
    double best_loss = current;
    // k = 0 is the current z; keep it unless a step strictly improves
    for (std::size_t k = 1; k < gammas.size(); ++k) {
      const double v = loss(unflatten(decoded.col(static_cast<Eigen::Index>(k)), d, m), nullptr);
      if (std::isfinite(v) && v < best_loss) {
        best_loss = v;
        best = k;
      }
    }
    z.z = batch.col(static_cast<Eigen::Index>(best));
    current = best_loss;
    local.epoch_losses.push_back(best_loss);
    local.chosen_gammas.push_back(scale * gammas[best]);
    local.grid_scales.push_back(scale);
    if (best == 0) scale *= cfg.stall_shrink;
  }
  if (cfg.n_epoch == 0) local.initial_loss = loss(model.decode_scaled(z0), nullptr);
  if (trace != nullptr) *trace = std::move(local);
  return z;
}

}  // namespace musculo
