#include "musculo/harness/system.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <utility>

#include "musculo/plant/geometry.hpp"

namespace musculo::harness {

Deadline::Deadline(std::string stage, double seconds) : stage_(std::move(stage)), seconds_(seconds) {}

Deadline Deadline::from_env(std::string stage) {
  const char* v = std::getenv(kStageTimeoutEnv);
  if (v == nullptr || *v == '\0') return Deadline(std::move(stage), 0.0);
  char* end = nullptr;
  const double s = std::strtod(v, &end);
  if (end == v || *end != '\0' || !std::isfinite(s)) {
    throw std::invalid_argument(std::string(kStageTimeoutEnv) + " is not a number: " + v);
  }
  return Deadline(std::move(stage), s);
}

void Deadline::check() const {
  if (seconds_ <= 0.0) return;
  const std::chrono::duration<double> used = std::chrono::steady_clock::now() - start_;
  if (used.count() > seconds_) {
    throw StageTimeout("stage '" + stage_ + "' exceeded its wall-clock limit of " +
                       std::to_string(seconds_) + " s");
  }
}

void SystemOptions::validate() const {
  plant.validate();
  verify.validate();
  if (!(control_rate > 0.0) || !(a_prime_rate > 0.0) || a_prime_rate > control_rate) {
    throw std::invalid_argument("SystemOptions: rates must be positive, A' rate <= control rate");
  }
  const double steps = 1.0 / (control_rate * plant.dt);
  if (std::abs(steps - std::round(steps)) > 1e-6) {
    throw std::invalid_argument("SystemOptions: the control period must be a multiple of dt");
  }
  if (!(store_dtheta > 0.0) || !(store_dtension > 0.0) || !(settle_velocity > 0.0) ||
      !(settle_hold >= 0.0)) {
    throw std::invalid_argument("SystemOptions: storage thresholds must be positive");
  }
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    throw std::invalid_argument("SystemOptions: target_fraction must be in (0, 1]");
  }
  if (batch.threshold < 1 || threshold_after_rupture < 1 || batch.data_count < 0) {
    throw std::invalid_argument("SystemOptions: batch thresholds must be >= 1");
  }
}

const Vector& Estimates::get(control::EstimatorKind kind) const {
  switch (kind) {
    case control::EstimatorKind::Direct: return direct;
    case control::EstimatorKind::A: return a;
    case control::EstimatorKind::APrime: return a_prime;
  }
  return direct;
}

namespace {

Vector mid_range(const plant::PlantConfig& c) {
  Vector t(c.joints());
  for (int j = 0; j < c.joints(); ++j) {
    t[j] = 0.5 * (c.joint_min[static_cast<std::size_t>(j)] + c.joint_max[static_cast<std::size_t>(j)]);
  }
  return t;
}

}  // namespace

System::System(SystemOptions options, RmaeModel model, std::uint64_t seed)
    : System(options, std::move(model), seed, mid_range(options.plant)) {}

System::System(SystemOptions options, RmaeModel model, std::uint64_t seed, const Vector& theta0)
    : options_(std::move(options)),
      plant_(plant::initial_state(options_.plant, theta0)),
      adaptive_(std::move(model), options_.buffer_capacity, options_.detector.min_samples),
      rng_(seed),
      settle_(options_.settle_velocity, options_.settle_hold) {
  options_.validate();
  const auto m = adaptive_.models.current();
  if (m->joints() != options_.plant.joints() || m->muscles() != options_.plant.muscles()) {
    throw std::invalid_argument("System: model dimensions do not match the plant");
  }
  command_ = plant_.l_ref;
}

double System::tick_dt() const { return steps_per_tick() * options_.plant.dt; }

int System::steps_per_tick() const {
  return static_cast<int>(std::lround(1.0 / (options_.control_rate * options_.plant.dt)));
}

SensorTriple System::reading() const {
  SensorTriple r = plant_.reading();
  r.length += adaptive_.length_correction;
  return r;
}

RuptureState System::learning_rupture() const {
  return options_.use_rupture.learning ? adaptive_.rupture
                                       : RuptureState::all_healthy(options_.plant.muscles());
}

RuptureState System::control_rupture() const {
  return options_.use_rupture.control ? adaptive_.rupture
                                      : RuptureState::all_healthy(options_.plant.muscles());
}

RuptureState System::estimation_rupture() const {
  return options_.use_rupture.estimation ? adaptive_.rupture
                                         : RuptureState::all_healthy(options_.plant.muscles());
}

void System::schedule(const plant::RuptureInjection& injection) {
  if (injection.muscle < 0 || injection.muscle >= options_.plant.muscles()) {
    throw std::out_of_range("System::schedule: muscle index");
  }
  pending_.push_back(injection);
  std::stable_sort(pending_.begin(), pending_.end(),
                   [](const auto& a, const auto& b) { return a.time < b.time; });
}

Vector System::random_target(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto& c = options_.plant;
  Vector t(c.joints());
  for (int j = 0; j < c.joints(); ++j) {
    const double lo = c.joint_min[static_cast<std::size_t>(j)];
    const double hi = c.joint_max[static_cast<std::size_t>(j)];
    t[j] = 0.5 * (lo + hi) + 0.5 * options_.target_fraction * (hi - lo) * unit(rng);
  }
  return t;
}

control::ControlResult System::plan(const Vector& theta_target) const {
  const auto model = adaptive_.models.current();
  const Vector tau = plant::gravity_torque(options_.plant, theta_target);
  const control::ActuationLaw law{options_.plant.f_bias, options_.plant.k_stiff};
  return control::solve_control(*model, theta_target, tau, plant_.tension, control_rupture(),
                                options_.control, law);
}

void System::tick(const Vector& command) {
  deadline_.check();
  if (command.size() != options_.plant.muscles()) {
    throw std::invalid_argument("System::tick: command has the wrong size");
  }
  command_ = command;
  const Vector plant_cmd = command - adaptive_.length_correction;
  for (int k = 0; k < steps_per_tick(); ++k) {
    while (!pending_.empty() && pending_.front().time <= plant_.time + 1e-9) {
      plant::inject_rupture(plant_, options_.plant, pending_.front());
      applied_.push_back(pending_.front());
      applied_.back().time = plant_.time;
      pending_.erase(pending_.begin());
    }
    plant::step(plant_, options_.plant, plant_cmd);
  }
}

void System::rebuild_detector() {
  if (!options_.detection || adaptive_.window.size() < options_.detector.min_samples) return;
  detector_ = anomaly::rebuild_anomaly_model(*adaptive_.models.current(), adaptive_.window,
                                             options_.detector, adaptive_.rupture);
}

std::vector<SystemEvent> System::verify(const std::vector<int>& muscles, std::ostream* log) {
  std::vector<SystemEvent> events;
  adaptive_.paused = true;
  for (const int i : muscles) {
    if (adaptive_.rupture.is_ruptured(i)) continue;
    const Vector plant_cmd = command_ - adaptive_.length_correction;
    const auto outcome = anomaly::verify_muscle(
        plant_, options_.plant, plant_cmd, adaptive_.length_correction, i,
        *adaptive_.models.current(), options_.verify, options_.verify_weights,
        options_.verify_descent);
    anomaly::apply_outcome(adaptive_, outcome);
    if (outcome.kind != anomaly::Outcome::FalseAlarm) {
      rupture_handled_ = true;
      detector_.reset();
      last_stored_.reset();
    }
    if (log != nullptr) anomaly::write_verification_record(*log, outcome);
    SystemEvent e;
    e.kind = SystemEvent::Kind::Verified;
    e.time = plant_.time;
    e.muscles = {i};
    e.outcome = outcome;
    events.push_back(std::move(e));
  }
  adaptive_.paused = false;
  settle_.reset();
  return events;
}

std::vector<SystemEvent> System::adapt(std::ostream* anomaly_log, std::ostream* verification_log) {
  std::vector<SystemEvent> events;
  last_score_.reset();
  if (adaptive_.paused) return events;
  const SensorTriple now = reading();
  const bool still = settle_.update(plant_.theta_dot, tick_dt());

  if (options_.detection && detector_) {
    auto report = anomaly::score(*adaptive_.models.current(), *detector_, now.tension, now.length,
                                 adaptive_.rupture);
    if (anomaly_log != nullptr) anomaly::write_anomaly_row(*anomaly_log, plant_.time, report);
    const auto flagged = report.flagged;
    last_score_ = std::move(report);
    if (!flagged.empty()) {
      events.push_back({SystemEvent::Kind::Detected, plant_.time, flagged, std::nullopt});
      if (options_.verification) {
        for (auto& e : verify(flagged, verification_log)) events.push_back(std::move(e));
        return events;
      }
    }
  }

  if (!still) return events;
  if (last_stored_) {
    const double dtheta = (now.theta - last_stored_->theta).norm();
    const double dtension = (now.tension - last_stored_->tension).norm();
    if (dtheta < options_.store_dtheta && dtension < options_.store_dtension) return events;
  }
  last_stored_ = now;
  ++stored_;
  adaptive_.buffer.push(now);
  adaptive_.window.push(now);
  events.push_back({SystemEvent::Kind::Stored, plant_.time, {}, std::nullopt});

  bool rebuilt = false;
  if (options_.learning) {
    OnlineBatchOptions batch = options_.batch;
    if (rupture_handled_) batch.threshold = options_.threshold_after_rupture;
    if (adaptive_.buffer.size() >= static_cast<std::size_t>(batch.threshold)) {
      const auto model = adaptive_.models.current();
      const auto rows =
          make_online_batch(adaptive_.buffer, now, learning_rupture(), *model, batch, rng_);
      adaptive_.models.publish(online_update(*model, rows, options_.update, rng_));
      ++updates_;
      events.push_back({SystemEvent::Kind::Updated, plant_.time, {}, std::nullopt});
      rebuild_detector();
      rebuilt = true;
    }
  }
  if (!rebuilt) rebuild_detector();
  return events;
}

EstimatorBank::EstimatorBank(const System& system) {
  const double ratio = system.options().control_rate / system.options().a_prime_rate;
  a_prime_every_ = std::max(1, static_cast<int>(std::lround(ratio)));
  const Vector theta = system.plant().theta;
  est_ = {theta, theta, theta};
}

const Estimates& EstimatorBank::update(const System& system) {
  const auto model = system.model();
  const SensorTriple r = system.reading();
  const RuptureState rupture = system.estimation_rupture();
  const auto& o = system.options();
  est_.direct = control::estimate_direct(*model, r.tension, r.length);
  est_.a = control::estimate_a(*model, est_.a, r.tension, r.length, rupture);
  if (ticks_ % a_prime_every_ == 0) {
    est_.a_prime = control::estimate_a_prime(*model, r.tension, r.length, rupture, o.estimation,
                                             o.estimation_descent);
  }
  ++ticks_;
  return est_;
}

}  // namespace musculo::harness
