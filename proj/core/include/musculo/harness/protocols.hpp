#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "musculo/harness/system.hpp"

namespace musculo::harness {

struct EvalProtocol {
  int n_targets = 5;
  double move_duration = 2.0;  // s
  double rest_duration = 0.5;  // s
  double total_window = 15.0;  // s

  static EvalProtocol sim() { return {}; }
  static EvalProtocol robot() { return {7, 3.0, 0.5, 25.0}; }
  void validate() const;
};

struct TargetRecord {
  Vector target;
  Vector reached;   // joint angle at the end of the rest
  double error = 0.0;  // |reached - target|
  double time = 0.0;
};

struct MetricsSummary {
  control::EstimatorKind estimator = control::EstimatorKind::Direct;
  double rmse_est = 0.0;  // of the chosen estimator
  double rmse_est_direct = 0.0;
  double rmse_est_a = 0.0;
  double rmse_est_a_prime = 0.0;
  double rmse_control = 0.0;  // mean of the per-target errors
  std::vector<TargetRecord> targets;
  double start_time = 0.0;
  double window = 0.0;
  std::size_t ticks = 0;
  std::uint64_t checksum_before = 0;
  std::uint64_t checksum_after = 0;
};

struct EvalOptions {
  std::uint64_t target_seed = 1;
  bool oracle_estimator = false;  // feed the true angle as the estimate
  std::ostream* log = nullptr;
};

/// Sends n_targets random targets through the controller (linear command
/// ramp over move_duration, then rest_duration hold), then holds until the
/// window ends. Learning and detection are not run. Estimates of all three
/// estimators are logged each control tick.
MetricsSummary run_eval_sequence(System& system, const EvalProtocol& protocol,
                                 control::EstimatorKind estimator, const EvalOptions& options = {});

void write_eval_header(std::ostream& os, int joints, int muscles);

struct SessionCadence {
  double control_move = 2.0;
  double control_rest = 0.5;
  double explore_move = 1.0;
  double explore_rest = 0.5;
  double bucket = 20.0;  // s per learning-curve point

  static SessionCadence sim() { return {}; }
  /// Robot profile: the sim cadence scaled to 3 s controlled moves.
  static SessionCadence robot() { return {3.0, 0.75, 1.5, 0.75, 20.0}; }
  void validate() const;
};

struct BucketStat {
  double start = 0.0;
  double end = 0.0;
  double rmse_est = 0.0;
  std::size_t ticks = 0;
  std::size_t stored = 0;
  std::size_t updates = 0;
};

struct SessionLogs {
  std::ostream* curve = nullptr;         // one row per bucket
  std::ostream* anomaly = nullptr;       // per scored tick
  std::ostream* verification = nullptr;  // JSON lines
};

struct SessionResult {
  std::vector<BucketStat> curve;
  double start_time = 0.0;
  double end_time = 0.0;
  std::size_t stored = 0;
  std::size_t updates = 0;
  std::vector<plant::RuptureInjection> injections;  // applied, plant time
  std::optional<double> first_detection;           // plant time
  std::vector<int> first_flagged;
  std::optional<double> detection_latency;  // s after the first injection
  std::vector<anomaly::VerificationOutcome> verifications;
  Vector max_d;                       // per muscle over every scored tick
  std::vector<double> first_exceed;   // plant time of the first d > threshold, < 0 if never
};

/// Online learning while alternating controlled moves to random targets and
/// exploratory moves towards model-predicted lengths for random (theta, f).
/// Samples are stored when the joint is stationary and far enough from the
/// last stored sample; every stored sample past the threshold triggers an
/// update. Detection and verification run when enabled in the options.
SessionResult run_online_session(System& system, double duration, const SessionCadence& cadence,
                                 const SessionLogs& logs = {});

void write_curve_header(std::ostream& os);

}  // namespace musculo::harness
