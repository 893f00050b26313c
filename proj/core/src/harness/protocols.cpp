#include "musculo/harness/protocols.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "musculo/harness/csv.hpp"

namespace musculo::harness {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

long ticks_for(const System& s, double seconds) {
  return static_cast<long>(std::lround(seconds / s.tick_dt()));
}

// Linear command ramp from `from` to `to` over `ticks`, then a hold.
Vector ramp(const Vector& from, const Vector& to, long k, long ticks) {
  if (ticks <= 0 || k >= ticks) return to;
  const double a = static_cast<double>(k + 1) / static_cast<double>(ticks);
  return from + a * (to - from);
}

void write_vector(CsvWriter& w, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.field(v[i]);
}

}  // namespace

void EvalProtocol::validate() const {
  if (n_targets < 1) throw std::invalid_argument("EvalProtocol: n_targets must be >= 1");
  if (!positive(move_duration) || !positive(rest_duration) || !positive(total_window)) {
    throw std::invalid_argument("EvalProtocol: durations must be positive");
  }
}

void SessionCadence::validate() const {
  for (const double v : {control_move, control_rest, explore_move, explore_rest, bucket}) {
    if (!positive(v)) throw std::invalid_argument("SessionCadence: durations must be positive");
  }
}

void write_eval_header(std::ostream& os, int joints, int muscles) {
  std::vector<std::string> h{"time", "target"};
  const auto add = [&](const char* p, int n) {
    for (int i = 0; i < n; ++i) h.push_back(p + std::to_string(i + 1));
  };
  add("theta", joints);
  add("theta_ref", joints);
  add("est_direct", joints);
  add("est_a", joints);
  add("est_a_prime", joints);
  add("f", muscles);
  add("l", muscles);
  CsvWriter(os).header(h);
}

MetricsSummary run_eval_sequence(System& system, const EvalProtocol& protocol,
                                 control::EstimatorKind estimator, const EvalOptions& options) {
  protocol.validate();
  MetricsSummary out;
  out.estimator = estimator;
  out.start_time = system.time();
  out.window = protocol.total_window;
  out.checksum_before = system.model()->checksum();

  std::mt19937_64 rng(options.target_seed);
  EstimatorBank bank(system);
  std::optional<CsvWriter> log;
  if (options.log != nullptr) log.emplace(*options.log);

  const long window_ticks = ticks_for(system, protocol.total_window);
  const long move_ticks = ticks_for(system, protocol.move_duration);
  const long rest_ticks = ticks_for(system, protocol.rest_duration);
  double sum_sel = 0.0;
  double sum_direct = 0.0;
  double sum_a = 0.0;
  double sum_ap = 0.0;
  long tick = 0;
  Vector theta_ref = system.plant().theta;
  int target_index = 0;

  const auto run_tick = [&](const Vector& command) {
    system.tick(command);
    const auto& e = bank.update(system);
    const Vector& theta = system.plant().theta;
    if (tick < window_ticks) {
      const double ed = (e.direct - theta).norm();
      const double ea = (e.a - theta).norm();
      const double eap = (e.a_prime - theta).norm();
      sum_direct += ed;
      sum_a += ea;
      sum_ap += eap;
      sum_sel += options.oracle_estimator ? 0.0 : (e.get(estimator) - theta).norm();
    }
    ++tick;
    if (log) {
      log->field(system.time()).field(target_index);
      write_vector(*log, theta);
      write_vector(*log, theta_ref);
      write_vector(*log, e.direct);
      write_vector(*log, e.a);
      write_vector(*log, e.a_prime);
      write_vector(*log, system.plant().tension);
      write_vector(*log, system.reading().length);
      log->end_row();
    }
  };

  for (int t = 0; t < protocol.n_targets; ++t) {
    target_index = t + 1;
    theta_ref = system.random_target(rng);
    const auto plan = system.plan(theta_ref);
    const Vector from = system.command();
    for (long k = 0; k < move_ticks + rest_ticks; ++k) run_tick(ramp(from, plan.l_ref, k, move_ticks));
    TargetRecord rec;
    rec.target = theta_ref;
    rec.reached = system.plant().theta;
    rec.error = (rec.reached - theta_ref).norm();
    rec.time = system.time();
    out.targets.push_back(rec);
  }
  const Vector hold = system.command();
  while (tick < window_ticks) run_tick(hold);

  const double n = static_cast<double>(std::min(tick, window_ticks));
  out.ticks = static_cast<std::size_t>(n);
  out.rmse_est_direct = sum_direct / n;
  out.rmse_est_a = sum_a / n;
  out.rmse_est_a_prime = sum_ap / n;
  out.rmse_est = sum_sel / n;
  double c = 0.0;
  for (const auto& r : out.targets) c += r.error;
  out.rmse_control = c / static_cast<double>(out.targets.size());
  out.checksum_after = system.model()->checksum();
  return out;
}

void write_curve_header(std::ostream& os) {
  CsvWriter(os).header({"bucket_start", "bucket_end", "rmse_est", "ticks", "stored", "updates"});
}

SessionResult run_online_session(System& system, double duration, const SessionCadence& cadence,
                                 const SessionLogs& logs) {
  cadence.validate();
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("run_online_session: duration must be >= 0");
  }
  const auto& opt = system.options();
  const int m = opt.plant.muscles();
  SessionResult out;
  out.start_time = system.time();
  out.max_d = Vector::Zero(m);
  out.first_exceed.assign(static_cast<std::size_t>(m), -1.0);
  const std::size_t injections_before = system.applied_injections().size();
  const std::size_t stored_before = system.stored();
  const std::size_t updates_before = system.updates();

  const long total = ticks_for(system, duration);
  const long bucket_ticks = std::max(1L, ticks_for(system, cadence.bucket));
  if (logs.anomaly != nullptr) anomaly::write_anomaly_header(*logs.anomaly, m);
  std::optional<CsvWriter> curve;
  if (logs.curve != nullptr) curve.emplace(*logs.curve);

  EstimatorBank bank(system);
  BucketStat bucket;
  bucket.start = system.time();
  double bucket_sum = 0.0;
  std::size_t bucket_stored0 = system.stored();
  std::size_t bucket_updates0 = system.updates();
  const auto close_bucket = [&]() {
    if (bucket.ticks == 0) return;
    bucket.end = system.time();
    bucket.rmse_est = bucket_sum / static_cast<double>(bucket.ticks);
    bucket.stored = system.stored() - bucket_stored0;
    bucket.updates = system.updates() - bucket_updates0;
    out.curve.push_back(bucket);
    if (curve) {
      curve->field(bucket.start).field(bucket.end).field(bucket.rmse_est);
      curve->field(static_cast<std::int64_t>(bucket.ticks));
      curve->field(static_cast<std::int64_t>(bucket.stored));
      curve->field(static_cast<std::int64_t>(bucket.updates));
      curve->end_row();
    }
    bucket = BucketStat{};
    bucket.start = system.time();
    bucket_sum = 0.0;
    bucket_stored0 = system.stored();
    bucket_updates0 = system.updates();
  };

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const control::ActuationLaw law{opt.plant.f_bias, opt.plant.k_stiff};
  long tick = 0;
  int phase = 0;  // 0 controlled move, 1 rest, 2 exploratory move, 3 rest
  long phase_tick = 0;
  long phase_len = 0;
  Vector from = system.command();
  Vector goal = from;

  while (tick < total) {
    if (phase_tick == phase_len) {
      if (tick > 0) phase = (phase + 1) % 4;
      phase_tick = 0;
      from = system.command();
      if (phase == 0) {
        goal = system.plan(system.random_target(system.rng())).l_ref;
        phase_len = ticks_for(system, cadence.control_move);
      } else if (phase == 2) {
        const Vector theta = system.random_target(system.rng());
        Vector f(m);
        for (int i = 0; i < m; ++i) {
          f[i] = opt.plant.f_bias + (opt.plant.f_max - opt.plant.f_bias) * unit(system.rng());
        }
        const Vector l = system.model()->reconstruct({theta, f, Vector()}, MaskMode::KnownThetaTension).length;
        goal = l + control::length_compensation(f, law);
        phase_len = ticks_for(system, cadence.explore_move);
      } else {
        goal = from;
        phase_len = ticks_for(system, phase == 1 ? cadence.control_rest : cadence.explore_rest);
      }
    }
    system.tick(ramp(from, goal, phase_tick, phase == 0 || phase == 2 ? phase_len : 0));
    ++phase_tick;
    ++tick;

    const auto& e = bank.update(system);
    bucket_sum += (e.get(opt.estimator) - system.plant().theta).norm();
    ++bucket.ticks;

    for (const auto& ev : system.adapt(logs.anomaly, logs.verification)) {
      if (ev.kind == SystemEvent::Kind::Detected && !out.first_detection) {
        out.first_detection = ev.time;
        out.first_flagged = ev.muscles;
      }
      if (ev.kind == SystemEvent::Kind::Verified && ev.outcome) {
        out.verifications.push_back(*ev.outcome);
      }
    }
    if (const auto& s = system.last_score()) {
      for (int i = 0; i < m; ++i) {
        out.max_d[i] = std::max(out.max_d[i], s->d[i]);
        auto& fe = out.first_exceed[static_cast<std::size_t>(i)];
        if (fe < 0.0 && s->d[i] > opt.detector.threshold) fe = system.time();
      }
    }
    if (tick % bucket_ticks == 0) close_bucket();
  }
  close_bucket();

  const auto& applied = system.applied_injections();
  out.injections.assign(applied.begin() + static_cast<long>(injections_before), applied.end());
  if (out.first_detection && !out.injections.empty()) {
    out.detection_latency = *out.first_detection - out.injections.front().time;
  }
  out.end_time = system.time();
  out.stored = system.stored() - stored_before;
  out.updates = system.updates() - updates_before;
  return out;
}

}  // namespace musculo::harness
