#pragma once

#include <vector>

#include <Eigen/Dense>

#include "musculo/rmae/sensor.hpp"
#include "musculo/plant/config.hpp"

namespace musculo::plant {

/// World positions of each joint centre; entry k is joint k+1 (entry 0 is the origin).
std::vector<Eigen::Vector2d> joint_positions(const PlantConfig& config, const Vector& theta);

/// World positions of a muscle's via-points at posture theta.
std::vector<Eigen::Vector2d> via_point_positions(const PlantConfig& config, int muscle,
                                                 const Vector& theta);

struct GeoLengths {
  Vector rel;  // mm, relative to theta = 0
  Vector abs;  // mm
};

/// Straight polyline through the via-points.
GeoLengths geo_lengths(const PlantConfig& config, const Vector& theta);

/// Path length in mm with tangent-arc-tangent wrapping around the cylinder of
/// every joint spanned by a segment between adjacent links. A wire keeps the
/// side of the cylinder it passes at the zero posture.
Vector true_lengths(const PlantConfig& config, const Vector& theta);

enum class WrapSide { Shortest, CounterClockwise, Clockwise };

/// Path from a to b around the circle (centre, radius) that does not enter
/// it. Shortest picks the shorter side; the other modes force the direction
/// in which the wire travels around the centre from a to b. An endpoint
/// inside or on the circle gives the straight distance.
double wrapped_segment_length(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& centre, double radius,
                              WrapSide side = WrapSide::Shortest);

/// Series-elastic stretch in mm for wire length l_abs (mm) under tension f (N).
double elastic_stretch(const PlantConfig& config, double l_abs, double f);
/// d(stretch)/df in mm/N.
double elastic_compliance(const PlantConfig& config, double l_abs, double f);
/// Inverse of elastic_stretch in f; returns 0 for non-positive stretch.
double elastic_tension(const PlantConfig& config, double l_abs, double stretch);

/// Torque (N m) that holds the chain against gravity; positive flexes.
Vector gravity_torque(const PlantConfig& config, const Vector& theta);

enum class LengthModel { Geometric, True };

/// d(length)/d(theta) in mm/rad by central differences, M x D.
Matrix length_jacobian(const PlantConfig& config, const Vector& theta, LengthModel model,
                       double step = 1e-6);

/// Clamp theta into the configured joint limits.
Vector clamp_to_limits(const PlantConfig& config, const Vector& theta);
bool within_limits(const PlantConfig& config, const Vector& theta, double tol = 1e-12);

}  // namespace musculo::plant
