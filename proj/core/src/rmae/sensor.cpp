#include "musculo/rmae/sensor.hpp"

#include <stdexcept>

namespace musculo {

SensorTriple SensorTriple::zeros(int joints, int muscles) {
  return {Vector::Zero(joints), Vector::Zero(muscles), Vector::Zero(muscles)};
}

bool SensorTriple::all_finite() const {
  return theta.allFinite() && tension.allFinite() && length.allFinite();
}

SensorTriple scale(const SensorTriple& triple, ScaleDirection direction, const Scaling& scaling) {
  SensorTriple out = triple;
  if (direction == ScaleDirection::ToNetwork) {
    out.tension /= scaling.tension;
    out.length /= scaling.length;
  } else {
    out.tension *= scaling.tension;
    out.length *= scaling.length;
  }
  return out;
}

std::array<double, 3> mask_bits(MaskMode mode) {
  switch (mode) {
    case MaskMode::KnownThetaTension:
      return {1.0, 1.0, 0.0};
    case MaskMode::KnownTensionLength:
      return {0.0, 1.0, 1.0};
    case MaskMode::KnownThetaLength:
      return {1.0, 0.0, 1.0};
  }
  throw std::invalid_argument("unknown mask mode");
}

std::string_view to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::KnownThetaTension:
      return "theta,f->l";
    case MaskMode::KnownTensionLength:
      return "f,l->theta";
    case MaskMode::KnownThetaLength:
      return "theta,l->f";
  }
  return "?";
}

Vector flatten(const SensorTriple& t) {
  Vector v(t.theta.size() + t.tension.size() + t.length.size());
  v << t.theta, t.tension, t.length;
  return v;
}

SensorTriple unflatten(const Eigen::Ref<const Vector>& v, int joints, int muscles) {
  if (v.size() != joints + 2 * muscles) {
    throw std::invalid_argument("unflatten: vector length does not match D + 2M");
  }
  return {v.segment(0, joints), v.segment(joints, muscles), v.segment(joints + muscles, muscles)};
}

RuptureState RuptureState::all_healthy(int muscles) {
  if (muscles <= 0) throw std::invalid_argument("RuptureState needs at least one muscle");
  RuptureState r;
  r.healthy_.assign(static_cast<std::size_t>(muscles), 1);
  return r;
}

bool RuptureState::any_ruptured() const {
  for (auto h : healthy_) {
    if (h == 0) return true;
  }
  return false;
}

std::vector<int> RuptureState::ruptured_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < healthy_.size(); ++i) {
    if (healthy_[i] == 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

RuptureState RuptureState::with_ruptured(int i) const {
  RuptureState r = *this;
  r.healthy_.at(static_cast<std::size_t>(i)) = 0;
  return r;
}

RuptureState RuptureState::with_healthy(int i) const {
  RuptureState r = *this;
  r.healthy_.at(static_cast<std::size_t>(i)) = 1;
  return r;
}

Vector RuptureState::weights() const {
  Vector w(static_cast<Eigen::Index>(healthy_.size()));
  for (std::size_t i = 0; i < healthy_.size(); ++i) w(static_cast<Eigen::Index>(i)) = healthy_[i];
  return w;
}

}  // namespace musculo
