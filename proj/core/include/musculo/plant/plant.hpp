#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "musculo/plant/config.hpp"
#include "musculo/rmae/sensor.hpp"

namespace musculo::plant {

enum class Health : std::uint8_t { Healthy = 0, WireCut = 1, EndpointOffset = 2 };

struct MuscleHealth {
  Health kind = Health::Healthy;
  double offset_mm = 0.0;  // path shortening for EndpointOffset

  bool operator==(const MuscleHealth&) const = default;
};

struct PlantState {
  double time = 0.0;
  Vector theta;      // rad
  Vector theta_dot;  // rad/s
  Vector motor_pos;  // mm of wound wire; the measured muscle length l
  Vector tension;    // N
  Vector l_ref;      // mm, last command
  std::vector<MuscleHealth> health;

  /// (theta, f, l) as the sensors report it.
  SensorTriple reading() const { return {theta, tension, motor_pos}; }
};

struct RuptureInjection {
  int muscle = 0;
  Health kind = Health::WireCut;
  double offset_mm = 0.0;
  double time = 0.0;
};

/// Rest posture theta0 with every muscle at f_bias and l_ref equal to the
/// resulting length. The joint is not yet in torque balance.
PlantState initial_state(const PlantConfig& config, const Vector& theta0);

/// One integration step of config.dt under command l_ref.
void step(PlantState& state, const PlantConfig& config, const Vector& l_ref);

/// Hold l_ref for `duration` seconds (a whole number of steps).
PlantState actuate(PlantState state, const PlantConfig& config, const Vector& l_ref,
                   double duration);

/// Marks the muscle as ruptured. WireCut drops its tension to zero at once;
/// EndpointOffset shortens its path, and the slack is wound in so the
/// reported length jumps by the offset while tension is transmitted.
void inject_rupture(PlantState& state, const PlantConfig& config,
                    const RuptureInjection& injection);

/// Synthetic training triple from the straight-line model: (theta, f,
/// geo_rel(theta) - stretch(geo_abs(theta), f)).
SensorTriple sample_static(const PlantConfig& config, const Vector& theta, const Vector& f);

/// n triples with theta uniform within the joint limits and f uniform in [0, f_max].
std::vector<SensorTriple> synthetic_dataset(const PlantConfig& config, int n, std::uint64_t seed);

double kinetic_energy(const PlantConfig& config, const PlantState& state);

/// Reports stationarity once every |theta_dot| stays below velocity_tol for
/// `hold` seconds.
class StationaryDetector {
 public:
  explicit StationaryDetector(double velocity_tol = 0.01, double hold = 0.2);

  bool update(const Vector& theta_dot, double dt);
  void reset() { quiet_time_ = 0.0; }
  bool stationary() const { return quiet_time_ >= hold_ - 1e-12; }

 private:
  double velocity_tol_;
  double hold_;
  double quiet_time_ = 0.0;
};

/// Trajectory CSV: time, theta_j, theta_dot_j, f_i, l_i, l_ref_i, health_i.
void write_trajectory_header(std::ostream& os, int joints, int muscles);
void write_trajectory_row(std::ostream& os, const PlantState& state);

}  // namespace musculo::plant
