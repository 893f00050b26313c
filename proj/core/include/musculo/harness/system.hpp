#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "musculo/anomaly/detector.hpp"
#include "musculo/anomaly/verification.hpp"
#include "musculo/control/controller.hpp"
#include "musculo/control/estimator.hpp"
#include "musculo/plant/plant.hpp"
#include "musculo/rmae/training.hpp"

namespace musculo::harness {

/// Thrown when a stage exceeds its wall-clock budget.
class StageTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wall-clock budget of one stage. A non-positive limit never expires.
class Deadline {
 public:
  Deadline() = default;
  Deadline(std::string stage, double seconds);

  /// Limit from MUSCULO_STAGE_TIMEOUT_S, unlimited when unset.
  static Deadline from_env(std::string stage);

  void check() const;
  const std::string& stage() const { return stage_; }
  double seconds() const { return seconds_; }

 private:
  std::string stage_;
  double seconds_ = 0.0;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline constexpr const char* kStageTimeoutEnv = "MUSCULO_STAGE_TIMEOUT_S";

/// Where rupture information r is allowed to act.
struct RuptureUse {
  bool learning = true;
  bool control = true;
  bool estimation = true;
};

struct SystemOptions {
  plant::PlantConfig plant;
  control::ControlWeights control = control::smooth_control_weights();
  control::EstimationWeights estimation = control::a_prime_weights();
  DescentConfig estimation_descent = control::a_prime_descent();
  control::VerifyWeights verify_weights;
  DescentConfig verify_descent;
  OnlineBatchOptions batch;
  OnlineUpdateOptions update{10, 10, {}, {3e-4}};  // lower rate than Adam default: state resets per update
  anomaly::DetectorConfig detector;
  anomaly::VerifyConfig verify;
  RuptureUse use_rupture;
  control::EstimatorKind estimator = control::EstimatorKind::Direct;

  bool learning = true;
  bool detection = false;
  bool verification = false;
  int threshold_after_rupture = 2;  // N_thre once a rupture has been handled

  double control_rate = 50.0;  // Hz
  double a_prime_rate = 10.0;  // Hz
  double store_dtheta = 0.1;   // rad
  double store_dtension = 10.0;  // N
  double settle_velocity = 0.01;  // rad/s
  double settle_hold = 0.2;       // s
  double target_fraction = 0.9;
  std::size_t buffer_capacity = 1000;

  void validate() const;
};

/// Estimates of every estimator for one control tick.
struct Estimates {
  Vector direct;
  Vector a;
  Vector a_prime;

  const Vector& get(control::EstimatorKind kind) const;
};

/// Something the online machinery did during a tick.
struct SystemEvent {
  enum class Kind { Stored, Updated, Detected, Verified } kind = Kind::Stored;
  double time = 0.0;
  std::vector<int> muscles;
  std::optional<anomaly::VerificationOutcome> outcome;
};

/// Plant, model and online adaptation state driven at the control rate.
class System {
 public:
  System(SystemOptions options, RmaeModel model, std::uint64_t seed);
  System(SystemOptions options, RmaeModel model, std::uint64_t seed, const Vector& theta0);

  const SystemOptions& options() const { return options_; }
  SystemOptions& options() { return options_; }
  const plant::PlantState& plant() const { return plant_; }
  plant::PlantState& plant() { return plant_; }
  anomaly::AdaptiveState& adaptive() { return adaptive_; }
  const anomaly::AdaptiveState& adaptive() const { return adaptive_; }
  std::shared_ptr<const RmaeModel> model() const { return adaptive_.models.current(); }
  std::mt19937_64& rng() { return rng_; }

  double time() const { return plant_.time; }
  double tick_dt() const;
  int steps_per_tick() const;

  /// Sensor reading in model coordinates (lengths shifted by the correction).
  SensorTriple reading() const;
  /// Last command in model coordinates.
  const Vector& command() const { return command_; }

  RuptureState learning_rupture() const;
  RuptureState control_rupture() const;
  RuptureState estimation_rupture() const;

  /// Injection applied at plant time `injection.time` during a later tick.
  void schedule(const plant::RuptureInjection& injection);
  const std::vector<plant::RuptureInjection>& applied_injections() const { return applied_; }

  void set_deadline(Deadline d) { deadline_ = std::move(d); }
  const Deadline& deadline() const { return deadline_; }

  /// Uniform target within target_fraction of the joint range around its centre.
  Vector random_target(std::mt19937_64& rng) const;

  /// solve_control towards theta_target against the gravity torque at the target.
  control::ControlResult plan(const Vector& theta_target) const;

  /// One control period holding `command` (model coordinates).
  void tick(const Vector& command);

  /// Storage, learning, detection and verification after a tick. Returns what happened.
  std::vector<SystemEvent> adapt(std::ostream* anomaly_log, std::ostream* verification_log);

  bool detector_ready() const { return detector_.has_value(); }
  /// Score computed by the latest adapt call, empty when that call scored nothing.
  const std::optional<anomaly::AnomalyReport>& last_score() const { return last_score_; }
  std::size_t updates() const { return updates_; }
  std::size_t stored() const { return stored_; }

 private:
  void rebuild_detector();
  std::vector<SystemEvent> verify(const std::vector<int>& muscles, std::ostream* log);

  SystemOptions options_;
  plant::PlantState plant_;
  anomaly::AdaptiveState adaptive_;
  std::mt19937_64 rng_;
  Vector command_;
  std::vector<plant::RuptureInjection> pending_;
  std::vector<plant::RuptureInjection> applied_;
  Deadline deadline_;

  plant::StationaryDetector settle_;
  std::optional<SensorTriple> last_stored_;
  std::optional<anomaly::AnomalyModel> detector_;
  std::optional<anomaly::AnomalyReport> last_score_;
  bool rupture_handled_ = false;
  std::size_t updates_ = 0;
  std::size_t stored_ = 0;
};

/// Runs all three estimators each tick: direct and A every call, A' at its
/// own rate with the value held in between. A starts from the true angle and
/// then feeds back its own estimate.
class EstimatorBank {
 public:
  explicit EstimatorBank(const System& system);

  const Estimates& update(const System& system);
  const Estimates& current() const { return est_; }

 private:
  Estimates est_;
  int a_prime_every_ = 1;
  long ticks_ = 0;
};

}  // namespace musculo::harness
