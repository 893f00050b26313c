#pragma once

#include "musculo/rmae/latent_descent.hpp"
#include "musculo/rmae/model.hpp"
#include "musculo/rmae/sensor.hpp"

namespace musculo::control {

struct ControlWeights {
  double w1 = 1.0;   // tension economy
  double w2 = 1.0;   // joint angle tracking
  double w3 = 0.01;  // torque balance, residual in N mm
  double w4 = 10.0;  // tension of ruptured muscles
  bool squared = false;
  DescentConfig descent{};
};

/// Squared terms rebalanced so that no term dominates the curvature, with a
/// shrinking grid. The plain norms stall on the kinks at theta = theta_ref
/// and zero torque residual, so r would never move tension off a ruptured
/// muscle.
ControlWeights smooth_control_weights();

/// Constants of the low-level stiffness law the controller compensates for.
struct ActuationLaw {
  double f_bias = 5.0;  // N
  double k_stiff = 2.0;  // N/mm
};

/// Length offset that makes the stiffness law produce tension f:
/// -(f - f_bias) / k_stiff, in mm.
double length_compensation(double f, const ActuationLaw& law);
Vector length_compensation(const Vector& f, const ActuationLaw& law);

/// Forward-difference muscle Jacobian d l / d theta in mm/rad (M x D) from
/// the (theta, f) -> l relation learned by the model.
Matrix muscle_jacobian(const RmaeModel& model, const Vector& theta, const Vector& f,
                       double dtheta = 1e-3);

struct ControlResult {
  Vector l_ref;       // mm, command for the stiffness law
  Vector f_pred;      // N, clamped at >= 0
  Vector theta_pred;  // rad
  Vector l_pred;      // mm, before compensation
  Matrix jacobian;    // mm/rad, frozen during the descent
  DescentTrace trace;
};

/// Searches the latent space from h_enc(theta_ref, f_cur) for a state that
/// reaches theta_ref with small tensions that balance tau_ref (N m). Ruptured
/// muscles are pushed towards zero tension.
ControlResult solve_control(const RmaeModel& model, const Vector& theta_ref, const Vector& tau_ref,
                            const Vector& f_cur, const RuptureState& rupture,
                            const ControlWeights& weights, const ActuationLaw& law);

}  // namespace musculo::control
