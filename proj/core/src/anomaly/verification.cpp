#include "musculo/anomaly/verification.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace musculo::anomaly {

void VerifyConfig::validate() const {
  for (const double v : {pull, tension_threshold, slack_threshold, max_overwind, settle_velocity,
                         timeout}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("VerifyConfig: thresholds and durations must be positive");
    }
  }
  if (!(settle_hold >= 0.0)) throw std::invalid_argument("VerifyConfig: negative settle_hold");
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Ruptured: return "ruptured";
    case Outcome::OffsetUsable: return "offset_usable";
    case Outcome::FalseAlarm: return "false_alarm";
  }
  return "?";
}

VerificationOutcome verify_muscle(plant::PlantState& state, const plant::PlantConfig& plant,
                                  const Vector& command, const Vector& length_correction,
                                  int muscle, const RmaeModel& model, const VerifyConfig& config,
                                  const control::VerifyWeights& weights,
                                  const DescentConfig& descent) {
  config.validate();
  const int m = plant.muscles();
  if (muscle < 0 || muscle >= m) throw std::out_of_range("verify_muscle: muscle index");
  if (command.size() != m || length_correction.size() != m) {
    throw std::invalid_argument("verify_muscle: command/correction sizes");
  }
  VerificationOutcome out;
  out.muscle = muscle;
  out.started = state.time;
  const double f_before = state.tension[muscle];

  Vector cmd = command;
  cmd[muscle] = std::min(command[muscle], state.motor_pos[muscle]) - config.pull;
  plant::StationaryDetector settle(config.settle_velocity, config.settle_hold);
  // the motor must finish the pull before stationarity counts
  const double min_time = config.pull / plant.motor_speed + config.settle_hold;
  double elapsed = 0.0;
  while (true) {
    plant::step(state, plant, cmd);
    elapsed += plant.dt;
    const bool still = settle.update(state.theta_dot, plant.dt);
    if (still && elapsed >= min_time) break;
    if (elapsed > config.timeout) {
      throw std::runtime_error("verify_muscle: joint did not settle within " +
                               std::to_string(config.timeout) + " s");
    }
  }
  out.delta_f = state.tension[muscle] - f_before;

  if (out.delta_f <= config.tension_threshold) {
    out.kind = Outcome::Ruptured;
  } else {
    const Vector l = state.motor_pos + length_correction;
    const double expected =
        control::reinit_offset(model, state.theta, state.tension, l, muscle, weights, descent);
    out.slack = expected - l[muscle];
    if (std::abs(out.slack) > config.slack_threshold) {
      out.kind = Outcome::OffsetUsable;
      out.corrected_origin = out.slack;
    } else {
      out.kind = Outcome::FalseAlarm;
    }
  }
  out.finished = state.time;
  return out;
}

AdaptiveState::AdaptiveState(RmaeModel initial, std::size_t buffer_capacity, std::size_t window_size)
    : models(initial),
      buffer(buffer_capacity),
      window(window_size),
      rupture(RuptureState::all_healthy(initial.muscles())),
      length_correction(Vector::Zero(initial.muscles())) {}

void apply_outcome(AdaptiveState& state, const VerificationOutcome& outcome) {
  const int i = outcome.muscle;
  if (i < 0 || i >= state.rupture.muscles()) throw std::out_of_range("apply_outcome: muscle index");
  switch (outcome.kind) {
    case Outcome::Ruptured:
      state.rupture = state.rupture.with_ruptured(i);
      break;
    case Outcome::OffsetUsable:
      state.length_correction[i] += outcome.corrected_origin;
      break;
    case Outcome::FalseAlarm:
      state.paused = false;
      return;
  }
  state.models.save_restore_point();
  state.buffer.clear();
  state.window.clear();
  state.paused = false;
}

void replace_muscle(AdaptiveState& state, int muscle) {
  state.models.restore();
  state.rupture = state.rupture.with_healthy(muscle);
}

void write_verification_record(std::ostream& os, const VerificationOutcome& o) {
  nlohmann::ordered_json j;
  j["time"] = o.started;
  j["finished"] = o.finished;
  j["muscle"] = o.muscle;
  j["outcome"] = std::string(to_string(o.kind));
  j["delta_f"] = o.delta_f;
  j["slack"] = o.slack;
  j["corrected_origin"] = o.corrected_origin;
  os << j.dump() << '\n';
}

}  // namespace musculo::anomaly
