#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace musculo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One synchronized reading: joint angles [rad], muscle tensions [N] and
/// muscle lengths [mm, relative to the zero-posture origin]. The same struct
/// carries network-unit values where a function says so.
struct SensorTriple {
  Vector theta;
  Vector tension;
  Vector length;

  static SensorTriple zeros(int joints, int muscles);

  int joints() const { return static_cast<int>(theta.size()); }
  int muscles() const { return static_cast<int>(tension.size()); }
  bool all_finite() const;
  bool operator==(const SensorTriple&) const = default;
};

/// Divisors that bring f and l to roughly unit scale; theta stays in rad.
struct Scaling {
  double tension = 200.0;  // N per network unit
  double length = 100.0;   // mm per network unit

  bool operator==(const Scaling&) const = default;
};

enum class ScaleDirection { ToNetwork, FromNetwork };

SensorTriple scale(const SensorTriple& triple, ScaleDirection direction,
                   const Scaling& scaling = {});

/// Which two channels the encoder sees; the third is zero-filled.
enum class MaskMode : std::uint8_t {
  KnownThetaTension = 0,   // (theta, f) -> l
  KnownTensionLength = 1,  // (f, l) -> theta
  KnownThetaLength = 2,    // (theta, l) -> f
};

inline constexpr std::array<MaskMode, 3> kAllMaskModes = {
    MaskMode::KnownThetaTension, MaskMode::KnownTensionLength, MaskMode::KnownThetaLength};

/// Mask bits in (theta, f, l) order.
std::array<double, 3> mask_bits(MaskMode mode);
std::string_view to_string(MaskMode mode);

/// Flattened network-space layout [theta; f; l].
Vector flatten(const SensorTriple& triple);
SensorTriple unflatten(const Eigen::Ref<const Vector>& v, int joints, int muscles);

/// Per-muscle health as seen by learning, control and estimation:
/// 1 = healthy, 0 = ruptured.
class RuptureState {
 public:
  RuptureState() = default;
  static RuptureState all_healthy(int muscles);

  int muscles() const { return static_cast<int>(healthy_.size()); }
  bool is_ruptured(int i) const { return healthy_.at(static_cast<std::size_t>(i)) == 0; }
  bool any_ruptured() const;
  std::vector<int> ruptured_indices() const;

  RuptureState with_ruptured(int i) const;
  RuptureState with_healthy(int i) const;

  /// r as a 0/1 vector for element-wise products.
  Vector weights() const;

  bool operator==(const RuptureState&) const = default;

 private:
  std::vector<std::uint8_t> healthy_;
};

}  // namespace musculo
