#pragma once

#include <string_view>

#include "musculo/rmae/latent_descent.hpp"
#include "musculo/rmae/model.hpp"
#include "musculo/rmae/sensor.hpp"

namespace musculo::control {

struct EstimationWeights {
  double w5 = 10.0;  // tension of ruptured muscles
  double w6 = 1.0;   // match to healthy tensions
  double w7 = 1.0;   // match to healthy lengths
  bool squared = false;  // squared norms give a smooth valley along f_i = 0
};

/// Descent settings that let A' walk the f_i = 0 valley: squared terms, a
/// shrinking grid on stalls and more epochs than the controller.
EstimationWeights a_prime_weights();
DescentConfig a_prime_descent();

struct VerifyWeights {
  double w8 = 1.0;   // match to the current joint angle
  double w9 = 1.0;   // match to the current tensions
  double w10 = 1.0;  // match to lengths other than the offset muscle
};

enum class EstimatorKind { Direct, A, APrime };

std::string_view to_string(EstimatorKind kind);
/// Accepts "direct", "a" and "a_prime"; throws std::invalid_argument otherwise.
EstimatorKind parse_estimator(std::string_view name);

/// theta from (f, l) in a single encode/decode pass.
Vector estimate_direct(const RmaeModel& model, const Vector& f_cur, const Vector& l_cur);

/// Replaces the readings of ruptured muscles with f = 0 and the length the
/// model predicts at the previous estimate, then estimates directly.
Vector estimate_a(const RmaeModel& model, const Vector& theta_prev, const Vector& f_cur,
                  const Vector& l_cur, const RuptureState& rupture);

/// Latent descent that matches only the healthy muscles' readings while
/// driving ruptured tensions to zero. The descent starts from the (f, l)
/// encoding with ruptured lengths set to zero, so the result does not depend
/// on ruptured lengths at all.
Vector estimate_a_prime(const RmaeModel& model, const Vector& f_cur, const Vector& l_cur,
                        const RuptureState& rupture, const EstimationWeights& weights,
                        const DescentConfig& descent, DescentTrace* trace = nullptr);

/// Model estimate (mm) of muscle `muscle`'s length given the current joint
/// angle, tensions and the other muscles' lengths. The difference to the
/// measured length is the origin shift of that muscle.
double reinit_offset(const RmaeModel& model, const Vector& theta_cur, const Vector& f_cur,
                     const Vector& l_cur, int muscle, const VerifyWeights& weights,
                     const DescentConfig& descent);

}  // namespace musculo::control
