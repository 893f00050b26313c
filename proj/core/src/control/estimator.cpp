#include "musculo/control/estimator.hpp"

#include <stdexcept>
#include <string>

#include "norm_term.hpp"

namespace musculo::control {

namespace {

void check_readings(const RmaeModel& model, const Vector& f, const Vector& l) {
  if (f.size() != model.muscles() || l.size() != model.muscles()) {
    throw std::invalid_argument("estimator: f/l sizes do not match the model");
  }
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Direct: return "direct";
    case EstimatorKind::A: return "a";
    case EstimatorKind::APrime: return "a_prime";
  }
  return "?";
}

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "direct") return EstimatorKind::Direct;
  if (name == "a") return EstimatorKind::A;
  if (name == "a_prime") return EstimatorKind::APrime;
  throw std::invalid_argument("unknown estimator '" + std::string(name) +
                              "' (expected direct, a or a_prime)");
}

EstimationWeights a_prime_weights() {
  EstimationWeights w;
  w.squared = true;
  return w;
}

DescentConfig a_prime_descent() {
  DescentConfig d;
  d.n_epoch = 100;
  d.stall_shrink = 0.5;
  return d;
}

Vector estimate_direct(const RmaeModel& model, const Vector& f_cur, const Vector& l_cur) {
  check_readings(model, f_cur, l_cur);
  return model.decode(model.encode({Vector(), f_cur, l_cur}, MaskMode::KnownTensionLength)).theta;
}

Vector estimate_a(const RmaeModel& model, const Vector& theta_prev, const Vector& f_cur,
                  const Vector& l_cur, const RuptureState& rupture) {
  check_readings(model, f_cur, l_cur);
  if (!rupture.any_ruptured()) return estimate_direct(model, f_cur, l_cur);
  Vector f = f_cur;
  Vector l = l_cur;
  const auto ruptured = rupture.ruptured_indices();
  for (const int i : ruptured) f[i] = 0.0;
  const Vector l_pred = model.reconstruct({theta_prev, f, Vector()}, MaskMode::KnownThetaTension).length;
  for (const int i : ruptured) l[i] = l_pred[i];
  return estimate_direct(model, f, l);
}

Vector estimate_a_prime(const RmaeModel& model, const Vector& f_cur, const Vector& l_cur,
                        const RuptureState& rupture, const EstimationWeights& weights,
                        const DescentConfig& descent, DescentTrace* trace) {
  check_readings(model, f_cur, l_cur);
  const int d = model.joints();
  const int m = model.muscles();
  const Vector r = rupture.weights();
  const Vector mask = Vector::Ones(m) - r;
  const Vector f_net = f_cur / model.scaling().tension;
  const Vector l_net = l_cur / model.scaling().length;

  const auto term = weights.squared ? detail::squared_term : detail::norm_term;
  const LatentObjective loss = [&](const SensorTriple& y, SensorTriple* grad) {
    const bool want = grad != nullptr;
    Vector gf = Vector::Zero(m);
    Vector gl = Vector::Zero(m);
    Vector tmp = Vector::Zero(m);
    double total = term(mask.cwiseProduct(y.tension), weights.w5, tmp, want);
    gf += mask.cwiseProduct(tmp);
    tmp.setZero();
    total += term(r.cwiseProduct(y.tension - f_net), weights.w6, tmp, want);
    gf += r.cwiseProduct(tmp);
    tmp.setZero();
    total += term(r.cwiseProduct(y.length - l_net), weights.w7, tmp, want);
    gl += r.cwiseProduct(tmp);
    if (want) *grad = {Vector::Zero(d), gf, gl};
    return total;
  };
  // a cut wire's reading is wherever the motor stopped winding; start the
  // descent from the zero-posture length instead
  Vector l_start = l_cur;
  for (const int i : rupture.ruptured_indices()) l_start[i] = 0.0;
  const LatentState z0 = model.encode({Vector(), f_cur, l_start}, MaskMode::KnownTensionLength);
  const LatentState z = latent_descend(model, z0, loss, descent, trace);
  return model.decode(z).theta;
}

double reinit_offset(const RmaeModel& model, const Vector& theta_cur, const Vector& f_cur,
                     const Vector& l_cur, int muscle, const VerifyWeights& weights,
                     const DescentConfig& descent) {
  check_readings(model, f_cur, l_cur);
  const int d = model.joints();
  const int m = model.muscles();
  if (muscle < 0 || muscle >= m) throw std::out_of_range("reinit_offset: muscle index");
  if (theta_cur.size() != d) throw std::invalid_argument("reinit_offset: theta size");
  Vector r_offset = Vector::Ones(m);
  r_offset[muscle] = 0.0;
  const Vector f_net = f_cur / model.scaling().tension;
  const Vector l_net = l_cur / model.scaling().length;

  const LatentObjective loss = [&](const SensorTriple& y, SensorTriple* grad) {
    const bool want = grad != nullptr;
    Vector gth = Vector::Zero(d);
    Vector gf = Vector::Zero(m);
    Vector tmp = Vector::Zero(m);
    double total = detail::norm_term(y.theta - theta_cur, weights.w8, gth, want);
    total += detail::norm_term(y.tension - f_net, weights.w9, gf, want);
    total += detail::norm_term(r_offset.cwiseProduct(y.length - l_net), weights.w10, tmp, want);
    if (want) *grad = {gth, gf, r_offset.cwiseProduct(tmp)};
    return total;
  };
  const LatentState z0 = model.encode({theta_cur, f_cur, Vector()}, MaskMode::KnownThetaTension);
  const LatentState z = latent_descend(model, z0, loss, descent);
  return model.decode(z).length[muscle];
}

}  // namespace musculo::control
