#pragma once

#include <functional>
#include <vector>

#include "musculo/rmae/model.hpp"

namespace musculo {

struct DescentConfig {
  double gamma_max = 0.5;
  int n_batch = 10;
  int n_epoch = 10;
  // When no step improves, the grid is scaled by this factor for the
  // following epochs. 1 keeps the grid fixed.
  double stall_shrink = 1.0;
};

/// Objective over a decoded triple in network units. Returns the loss and,
/// when `grad` is non-null, writes dLoss/dtriple into it (same shapes).
using LatentObjective = std::function<double(const SensorTriple& decoded, SensorTriple* grad)>;

/// Step sizes tried each epoch: n_batch + 1 values from 0 to gamma_max
/// inclusive. The zero step keeps the current z, so the selected loss never
/// increases.
std::vector<double> gamma_grid(const DescentConfig& cfg);

struct DescentTrace {
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;    // loss of the selected candidate per epoch
  std::vector<double> chosen_gammas;   // step size selected per epoch
  std::vector<double> grid_scales;     // gamma_max multiplier used per epoch
  bool stationary = false;             // stopped on a zero gradient
};

/// Normalized-gradient descent in the latent space with a per-epoch line
/// search over gamma_grid: z <- z - gamma * g / |g| with g = dL/dz obtained by
/// back-propagating through the decoder.
LatentState latent_descend(const RmaeModel& model, const LatentState& z0,
                           const LatentObjective& loss, const DescentConfig& cfg,
                           DescentTrace* trace = nullptr);

/// The candidate latents of one epoch, exposed for tests.
std::vector<LatentState> descent_candidates(const LatentState& z, const Vector& gradient,
                                            const DescentConfig& cfg);

}  // namespace musculo
