#include "musculo/control/controller.hpp"

#include <stdexcept>

#include "norm_term.hpp"

namespace musculo::control {

ControlWeights smooth_control_weights() {
  ControlWeights w;
  w.w2 = 10.0;
  w.w3 = 1e-6;
  w.w4 = 100.0;
  w.squared = true;
  w.descent.n_epoch = 100;
  w.descent.stall_shrink = 0.5;
  return w;
}

double length_compensation(double f, const ActuationLaw& law) {
  return -(f - law.f_bias) / law.k_stiff;
}

Vector length_compensation(const Vector& f, const ActuationLaw& law) {
  return -(f.array() - law.f_bias).matrix() / law.k_stiff;
}

Matrix muscle_jacobian(const RmaeModel& model, const Vector& theta, const Vector& f,
                       double dtheta) {
  const int d = model.joints();
  const int m = model.muscles();
  if (theta.size() != d || f.size() != m) {
    throw std::invalid_argument("muscle_jacobian: theta/f sizes do not match the model");
  }
  if (!(dtheta > 0.0)) throw std::invalid_argument("muscle_jacobian: dtheta must be positive");
  const auto mode = MaskMode::KnownThetaTension;
  const Vector f_net = f / model.scaling().tension;
  Matrix inputs(model.input_dim(), d + 1);
  for (int c = 0; c <= d; ++c) {
    SensorTriple t{theta, f_net, Vector()};
    if (c > 0) t.theta[c - 1] += dtheta;
    inputs.col(c) = model.assemble_input(t, mode);
  }
  const Matrix out = model.reconstruct_batch(inputs);
  const Vector base = out.col(0).segment(d + m, m);
  Matrix g(m, d);
  for (int c = 0; c < d; ++c) {
    g.col(c) = (out.col(c + 1).segment(d + m, m) - base) * (model.scaling().length / dtheta);
  }
  return g;
}

ControlResult solve_control(const RmaeModel& model, const Vector& theta_ref, const Vector& tau_ref,
                            const Vector& f_cur, const RuptureState& rupture,
                            const ControlWeights& weights, const ActuationLaw& law) {
  const int d = model.joints();
  const int m = model.muscles();
  if (theta_ref.size() != d || tau_ref.size() != d || f_cur.size() != m ||
      rupture.muscles() != m) {
    throw std::invalid_argument("solve_control: argument sizes do not match the model");
  }
  if (!theta_ref.allFinite() || !tau_ref.allFinite() || !f_cur.allFinite()) {
    throw std::domain_error("solve_control: non-finite input");
  }
  ControlResult out;
  out.jacobian = muscle_jacobian(model, theta_ref, f_cur);
  const double f_scale = model.scaling().tension;
  const Vector tau_mm = tau_ref * 1000.0;
  const Matrix gt_scaled = out.jacobian.transpose() * f_scale;  // N mm per network tension unit
  const auto ruptured = rupture.ruptured_indices();

  const auto term = weights.squared ? detail::squared_term : detail::norm_term;
  const LatentObjective loss = [&](const SensorTriple& y, SensorTriple* grad) {
    const bool want = grad != nullptr;
    Vector gth = Vector::Zero(d);
    Vector gf = Vector::Zero(m);
    double total = term(y.tension, weights.w1, gf, want);
    total += term(y.theta - theta_ref, weights.w2, gth, want);
    const Vector torque = tau_mm + gt_scaled * y.tension;
    Vector gtorque = Vector::Zero(d);
    total += term(torque, weights.w3, gtorque, want);
    if (want) gf += gt_scaled.transpose() * gtorque;
    if (!ruptured.empty()) {
      Vector fr(static_cast<Eigen::Index>(ruptured.size()));
      for (std::size_t k = 0; k < ruptured.size(); ++k) fr[static_cast<Eigen::Index>(k)] = y.tension[ruptured[k]];
      Vector gfr = Vector::Zero(fr.size());
      total += term(fr, weights.w4, gfr, want);
      if (want) {
        for (std::size_t k = 0; k < ruptured.size(); ++k) gf[ruptured[k]] += gfr[static_cast<Eigen::Index>(k)];
      }
    }
    if (want) *grad = {gth, gf, Vector::Zero(m)};
    return total;
  };

  const LatentState z0 = model.encode({theta_ref, f_cur, Vector()}, MaskMode::KnownThetaTension);
  const LatentState z = latent_descend(model, z0, loss, weights.descent, &out.trace);
  const SensorTriple y = model.decode(z);
  out.theta_pred = y.theta;
  out.f_pred = y.tension.cwiseMax(0.0);
  out.l_pred = y.length;
  out.l_ref = out.l_pred + length_compensation(out.f_pred, law);
  return out;
}

}  // namespace musculo::control
