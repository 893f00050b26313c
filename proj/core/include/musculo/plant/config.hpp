#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace musculo::plant {

/// A muscle via-point fixed to a link. Link 0 is the fixed base and `pos` is
/// in world coordinates; for link k >= 1 `pos` is (along, lateral) in the
/// frame of the link distal to joint k. All in metres.
struct ViaPoint {
  int link = 0;
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
};

struct MuscleRoute {
  std::string name;
  std::vector<ViaPoint> points;  // origin, relays, insertion
  double wrap_radius = 0.02;     // cylinder at each spanned joint [m]
};

/// Link distal to one joint of the planar chain.
struct LinkConfig {
  double length = 0.3;   // to the next joint [m]
  double mass = 1.0;     // [kg]
  double com = 0.15;     // centre of mass along the link [m]
  double inertia = 0.05; // about the joint [kg m^2]
};

/// Planar serial chain hanging from a fixed base: at theta = 0 every link
/// points straight down and positive angles flex towards +x.
struct PlantConfig {
  std::vector<LinkConfig> links;
  std::vector<MuscleRoute> routes;
  std::vector<double> joint_min;
  std::vector<double> joint_max;

  double damping = 0.5;            // N m s / rad
  double coulomb = 0.2;            // N m
  double coulomb_velocity = 0.01;  // rad/s, tanh regularization width
  double gravity = 9.81;           // m/s^2

  // series elastic element: dl = k_wire * l_abs * f + k_nle * (1 - exp(-f / f0))
  double k_wire = 1e-6;  // mm stretch per (mm of wire * N)
  double k_nle = 60.0;   // mm
  double f0 = 300.0;     // N

  // muscle stiffness control: f_send = f_bias + max(0, k_stiff (l - l_ref))
  double f_bias = 5.0;    // N
  double k_stiff = 2.0;   // N/mm
  double f_max = 200.0;   // N, upper end of synthetic tension draws

  double max_overwind = 100.0;  // mm the motor may wind beyond l_ref
  double motor_speed = 100.0;   // mm/s winding speed limit
  double dt = 1e-3;             // s
  std::uint64_t seed = 1;

  int joints() const { return static_cast<int>(links.size()); }
  int muscles() const { return static_cast<int>(routes.size()); }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

/// One joint (elbow), two flexors with distinct via-points and one extensor.
PlantConfig default_elbow_config();

/// Two joints (shoulder, elbow) and five muscles including one biarticular.
PlantConfig planar_arm_config();

PlantConfig load_plant_config(const std::filesystem::path& path);
void save_plant_config(const std::filesystem::path& path, const PlantConfig& config);

/// JSON text round trip (used for config snapshots and hashing).
std::string plant_config_to_json(const PlantConfig& config);
PlantConfig plant_config_from_json(const std::string& text);

}  // namespace musculo::plant
