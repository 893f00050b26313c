#pragma once

#include <ostream>
#include <string_view>

#include "musculo/anomaly/detector.hpp"
#include "musculo/control/estimator.hpp"
#include "musculo/plant/plant.hpp"
#include "musculo/rmae/model_slot.hpp"
#include "musculo/rmae/training.hpp"

namespace musculo::anomaly {

struct VerifyConfig {
  double pull = 10.0;              // mm wound beyond the current length
  double tension_threshold = 10.0; // N, minimum tension rise of a working muscle
  double slack_threshold = 30.0;   // mm, origin shift that marks an offset muscle
  double max_overwind = 100.0;     // mm
  double settle_velocity = 0.01;   // rad/s
  double settle_hold = 0.2;        // s
  double timeout = 5.0;            // s

  void validate() const;
};

enum class Outcome {
  Ruptured,      // no tension response: the muscle cannot be used
  OffsetUsable,  // transmits force but its length origin moved
  FalseAlarm,
};

std::string_view to_string(Outcome outcome);

struct VerificationOutcome {
  int muscle = -1;
  Outcome kind = Outcome::FalseAlarm;
  double corrected_origin = 0.0;  // mm to add to the muscle's length readings (OffsetUsable)
  double delta_f = 0.0;           // N, tension change caused by the pull
  double slack = 0.0;             // mm, model-expected minus measured length after the pull
  double started = 0.0;           // s, plant time
  double finished = 0.0;
};

/// Pull test on one muscle. The other muscles hold `command` (plant length
/// coordinates); the tested muscle is wound `pull` mm beyond min(command,
/// current length). After the joint settles the tension rise and the
/// model-estimated origin shift decide the outcome. `length_correction` maps
/// plant lengths to model coordinates (reading = motor_pos + correction).
/// Throws std::runtime_error if the joint does not settle within the timeout.
VerificationOutcome verify_muscle(plant::PlantState& state, const plant::PlantConfig& plant,
                                  const Vector& command, const Vector& length_correction,
                                  int muscle, const RmaeModel& model, const VerifyConfig& config,
                                  const control::VerifyWeights& weights,
                                  const DescentConfig& descent);

/// Everything a verification outcome can change.
struct AdaptiveState {
  explicit AdaptiveState(RmaeModel initial, std::size_t buffer_capacity = 1000,
                         std::size_t window = kDetectWindow);

  ModelSlot models;
  TrainingBuffer buffer;
  AnomalyWindow window;
  RuptureState rupture;
  Vector length_correction;  // mm, per muscle
  bool paused = false;       // learning and detection halted during verification
};

/// (a) marks the muscle ruptured, (b) rebases its length origin; both save a
/// restore point and clear the training buffer and the anomaly window. (c)
/// changes nothing. Always resumes learning and detection.
void apply_outcome(AdaptiveState& state, const VerificationOutcome& outcome);

/// The muscle was repaired or replaced: restore the saved model and mark it healthy.
void replace_muscle(AdaptiveState& state, int muscle);

/// One JSON object per line: time, muscle, outcome, delta_f, slack, corrected_origin.
void write_verification_record(std::ostream& os, const VerificationOutcome& outcome);

}  // namespace musculo::anomaly
