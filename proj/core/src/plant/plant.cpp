#include "musculo/plant/plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "musculo/plant/geometry.hpp"

namespace musculo::plant {

namespace {

void check_sizes(const PlantConfig& config, const PlantState& s) {
  const auto d = config.joints();
  const auto m = config.muscles();
  if (s.theta.size() != d || s.theta_dot.size() != d || s.motor_pos.size() != m ||
      s.tension.size() != m || s.l_ref.size() != m || static_cast<int>(s.health.size()) != m) {
    throw std::invalid_argument("PlantState does not match the plant dimensions");
  }
}

// f = f_bias + K max(0, c - stretch(f)), c = path length minus command
double commanded_tension(const PlantConfig& config, double l_abs, double c) {
  if (c - elastic_stretch(config, l_abs, config.f_bias) <= 0.0) return config.f_bias;
  // h(f) = f - f_bias - K (c - stretch(f)) is concave increasing; Newton from
  // f_bias stays left of the root
  double f = config.f_bias;
  for (int it = 0; it < 100; ++it) {
    const double h = f - config.f_bias - config.k_stiff * (c - elastic_stretch(config, l_abs, f));
    const double dh = 1.0 + config.k_stiff * elastic_compliance(config, l_abs, f);
    const double delta = h / dh;
    f -= delta;
    if (std::abs(delta) <= 1e-12 * std::max(1.0, f)) break;
  }
  return f;
}

}  // namespace

PlantState initial_state(const PlantConfig& config, const Vector& theta0) {
  config.validate();
  if (!within_limits(config, theta0)) {
    throw std::invalid_argument("initial_state: theta0 outside the joint limits");
  }
  const int d = config.joints();
  const int m = config.muscles();
  PlantState s;
  s.theta = theta0;
  s.theta_dot = Vector::Zero(d);
  s.tension = Vector::Constant(m, config.f_bias);
  s.health.assign(static_cast<std::size_t>(m), MuscleHealth{});
  const Vector abs = true_lengths(config, theta0);
  const Vector rel = abs - true_lengths(config, Vector::Zero(d));
  s.motor_pos.resize(m);
  for (int i = 0; i < m; ++i) {
    s.motor_pos[i] = rel[i] - elastic_stretch(config, abs[i], config.f_bias);
  }
  s.l_ref = s.motor_pos;
  return s;
}

void step(PlantState& s, const PlantConfig& config, const Vector& l_ref) {
  check_sizes(config, s);
  if (l_ref.size() != config.muscles()) {
    throw std::invalid_argument("step: l_ref has the wrong size");
  }
  if (!l_ref.allFinite()) throw std::domain_error("step: non-finite length command");
  const int d = config.joints();
  const int m = config.muscles();
  const double dt = config.dt;
  const double max_move = config.motor_speed * dt;
  s.l_ref = l_ref;

  const Vector abs = true_lengths(config, s.theta);
  const Vector rel = abs - true_lengths(config, Vector::Zero(d));
  for (int i = 0; i < m; ++i) {
    const auto& h = s.health[static_cast<std::size_t>(i)];
    const double floor = l_ref[i] - config.max_overwind;
    if (h.kind == Health::WireCut) {
      // nothing resists the winding motor
      s.motor_pos[i] = std::max(s.motor_pos[i] - max_move, std::min(floor, s.motor_pos[i]));
      s.tension[i] = 0.0;
      continue;
    }
    const double path = rel[i] - (h.kind == Health::EndpointOffset ? h.offset_mm : 0.0);
    const double f_target = commanded_tension(config, abs[i], path - l_ref[i]);
    const double l_target = path - elastic_stretch(config, abs[i], f_target);
    const double delta = std::clamp(l_target - s.motor_pos[i], -max_move, max_move);
    double l = s.motor_pos[i] + delta;
    l = std::max(l, std::min(floor, s.motor_pos[i]));
    s.motor_pos[i] = l;
    s.tension[i] = elastic_tension(config, abs[i], path - l);
  }

  const Matrix g = length_jacobian(config, s.theta, LengthModel::True);  // mm/rad
  const Vector hold = gravity_torque(config, s.theta);
  for (int j = 0; j < d; ++j) {
    const double muscle = -g.col(j).dot(s.tension) / 1000.0;
    const double w = s.theta_dot[j];
    const double tau = muscle - hold[j] - config.damping * w -
                       config.coulomb * std::tanh(w / config.coulomb_velocity);
    const auto& link = config.links[static_cast<std::size_t>(j)];
    s.theta_dot[j] += dt * tau / link.inertia;
    s.theta[j] += dt * s.theta_dot[j];
    const double lo = config.joint_min[static_cast<std::size_t>(j)];
    const double hi = config.joint_max[static_cast<std::size_t>(j)];
    if (s.theta[j] < lo) {
      s.theta[j] = lo;
      s.theta_dot[j] = std::max(0.0, s.theta_dot[j]);
    } else if (s.theta[j] > hi) {
      s.theta[j] = hi;
      s.theta_dot[j] = std::min(0.0, s.theta_dot[j]);
    }
  }
  s.time += dt;
}

PlantState actuate(PlantState state, const PlantConfig& config, const Vector& l_ref,
                   double duration) {
  const double steps = duration / config.dt;
  const auto n = static_cast<long>(std::llround(steps));
  if (n < 0 || std::abs(steps - static_cast<double>(n)) > 1e-6) {
    throw std::invalid_argument("actuate: duration must be a non-negative multiple of dt");
  }
  for (long k = 0; k < n; ++k) step(state, config, l_ref);
  return state;
}

void inject_rupture(PlantState& state, const PlantConfig& config,
                    const RuptureInjection& injection) {
  check_sizes(config, state);
  if (injection.muscle < 0 || injection.muscle >= config.muscles()) {
    throw std::out_of_range("inject_rupture: muscle index " + std::to_string(injection.muscle));
  }
  if (!(injection.time >= 0.0)) throw std::invalid_argument("inject_rupture: negative time");
  auto& h = state.health[static_cast<std::size_t>(injection.muscle)];
  if (h.kind != Health::Healthy) {
    throw std::logic_error("inject_rupture: muscle " + std::to_string(injection.muscle) +
                           " is already ruptured");
  }
  const auto i = injection.muscle;
  switch (injection.kind) {
    case Health::WireCut:
      h = {Health::WireCut, 0.0};
      state.tension[i] = 0.0;
      break;
    case Health::EndpointOffset:
      if (!(injection.offset_mm > 0.0) || !std::isfinite(injection.offset_mm)) {
        throw std::invalid_argument("inject_rupture: offset must be positive");
      }
      h = {Health::EndpointOffset, injection.offset_mm};
      state.motor_pos[i] -= injection.offset_mm;
      break;
    case Health::Healthy:
      throw std::invalid_argument("inject_rupture: Healthy is not a rupture kind");
  }
}

SensorTriple sample_static(const PlantConfig& config, const Vector& theta, const Vector& f) {
  if (!within_limits(config, theta)) {
    throw std::invalid_argument("sample_static: theta outside the joint limits");
  }
  if (f.size() != config.muscles()) throw std::invalid_argument("sample_static: bad f size");
  for (int i = 0; i < f.size(); ++i) {
    if (!(f[i] >= 0.0 && f[i] <= config.f_max)) {
      throw std::invalid_argument("sample_static: tension outside [0, f_max]");
    }
  }
  const GeoLengths geo = geo_lengths(config, theta);
  SensorTriple t{theta, f, Vector(config.muscles())};
  for (int i = 0; i < f.size(); ++i) {
    t.length[i] = geo.rel[i] - elastic_stretch(config, geo.abs[i], f[i]);
  }
  return t;
}

std::vector<SensorTriple> synthetic_dataset(const PlantConfig& config, int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("synthetic_dataset: negative count");
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int d = config.joints();
  const int m = config.muscles();
  std::vector<SensorTriple> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Vector theta(d);
    Vector f(m);
    for (int j = 0; j < d; ++j) {
      const double lo = config.joint_min[static_cast<std::size_t>(j)];
      const double hi = config.joint_max[static_cast<std::size_t>(j)];
      theta[j] = lo + (hi - lo) * unit(rng);
    }
    for (int i = 0; i < m; ++i) f[i] = config.f_max * unit(rng);
    out.push_back(sample_static(config, theta, f));
  }
  return out;
}

double kinetic_energy(const PlantConfig& config, const PlantState& state) {
  double e = 0.0;
  for (int j = 0; j < config.joints(); ++j) {
    e += 0.5 * config.links[static_cast<std::size_t>(j)].inertia * state.theta_dot[j] *
         state.theta_dot[j];
  }
  return e;
}

StationaryDetector::StationaryDetector(double velocity_tol, double hold)
    : velocity_tol_(velocity_tol), hold_(hold) {
  if (!(velocity_tol > 0.0) || !(hold >= 0.0)) {
    throw std::invalid_argument("StationaryDetector: tolerance must be > 0 and hold >= 0");
  }
}

bool StationaryDetector::update(const Vector& theta_dot, double dt) {
  if (theta_dot.cwiseAbs().maxCoeff() < velocity_tol_) {
    quiet_time_ += dt;
  } else {
    quiet_time_ = 0.0;
  }
  return stationary();
}

void write_trajectory_header(std::ostream& os, int joints, int muscles) {
  os << "time";
  for (int j = 0; j < joints; ++j) os << ",theta" << j + 1;
  for (int j = 0; j < joints; ++j) os << ",theta_dot" << j + 1;
  for (int i = 0; i < muscles; ++i) os << ",f" << i + 1;
  for (int i = 0; i < muscles; ++i) os << ",l" << i + 1;
  for (int i = 0; i < muscles; ++i) os << ",l_ref" << i + 1;
  for (int i = 0; i < muscles; ++i) os << ",health" << i + 1;
  os << '\n';
}

void write_trajectory_row(std::ostream& os, const PlantState& s) {
  os << s.time;
  for (Eigen::Index j = 0; j < s.theta.size(); ++j) os << ',' << s.theta[j];
  for (Eigen::Index j = 0; j < s.theta_dot.size(); ++j) os << ',' << s.theta_dot[j];
  for (Eigen::Index i = 0; i < s.tension.size(); ++i) os << ',' << s.tension[i];
  for (Eigen::Index i = 0; i < s.motor_pos.size(); ++i) os << ',' << s.motor_pos[i];
  for (Eigen::Index i = 0; i < s.l_ref.size(); ++i) os << ',' << s.l_ref[i];
  for (const auto& h : s.health) os << ',' << static_cast<int>(h.kind);
  os << '\n';
}

}  // namespace musculo::plant
