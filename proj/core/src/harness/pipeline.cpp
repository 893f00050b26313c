#include "musculo/harness/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "musculo/harness/csv.hpp"

namespace musculo::harness {

namespace {

using Clock = std::chrono::steady_clock;

std::filesystem::path resolve(const ScenarioConfig& c, const std::string& ref) {
  const std::filesystem::path p(ref);
  return p.is_absolute() || c.base_dir.empty() ? p : c.base_dir / p;
}

struct Context {
  const ScenarioConfig& config;
  RunReport& report;
  ArtifactSink& sink;
  std::map<std::string, double> wall;
};

// Runs one stage under its own deadline; records the outcome and flushes logs.
template <typename F>
auto stage(Context& ctx, const std::string& name, F&& body) {
  const auto t0 = Clock::now();
  const Deadline deadline = Deadline::from_env(name);
  const auto finish = [&](const std::string& status, const std::string& error) {
    ctx.wall[name] = std::chrono::duration<double>(Clock::now() - t0).count();
    ctx.report.stages.push_back({name, status, error});
    ctx.sink.flush();
  };
  try {
    if constexpr (std::is_void_v<decltype(body(deadline))>) {
      body(deadline);
      finish("ok", "");
    } else {
      auto out = body(deadline);
      finish("ok", "");
      return out;
    }
  } catch (const std::exception& e) {
    finish("failed", e.what());
    throw;
  }
}

void add_eval(RunReport& r, const std::string& prefix, const MetricsSummary& m) {
  r.metrics[prefix + ".rmse_control"] = m.rmse_control;
  r.metrics[prefix + ".rmse_est"] = m.rmse_est;
  r.metrics[prefix + ".rmse_est_direct"] = m.rmse_est_direct;
  r.metrics[prefix + ".rmse_est_a"] = m.rmse_est_a;
  r.metrics[prefix + ".rmse_est_a_prime"] = m.rmse_est_a_prime;
}

// Rupture knowledge a perfect verification would produce for the injections.
void oracle_knowledge(const std::vector<plant::RuptureInjection>& injections, int muscles,
                      RuptureState& rupture, Vector& correction) {
  rupture = RuptureState::all_healthy(muscles);
  correction = Vector::Zero(muscles);
  for (const auto& inj : injections) {
    if (inj.kind == plant::Health::WireCut) rupture = rupture.with_ruptured(inj.muscle);
    if (inj.kind == plant::Health::EndpointOffset) correction[inj.muscle] += inj.offset_mm;
  }
}

std::vector<plant::RuptureInjection> at_time_zero(std::vector<plant::RuptureInjection> v) {
  for (auto& inj : v) inj.time = 0.0;
  return v;
}

bool has_wire_cut(const std::vector<plant::RuptureInjection>& v) {
  for (const auto& inj : v) {
    if (inj.kind == plant::Health::WireCut) return true;
  }
  return false;
}

std::string model_bytes(const RmaeModel& m) {
  std::ostringstream os(std::ios::binary);
  write_model(os, m);
  return os.str();
}

RmaeModel obtain_model(Context& ctx) {
  const auto& c = ctx.config;
  if (!c.model_path.empty()) {
    return stage(ctx, "load_model", [&](const Deadline&) {
      RmaeModel m = load_model(resolve(c, c.model_path));
      if (m.joints() != c.plant.joints() || m.muscles() != c.plant.muscles()) {
        throw std::invalid_argument("model dimensions do not match the plant");
      }
      ctx.report.labels["model_source"] = "checkpoint";
      return m;
    });
  }
  return stage(ctx, "train_initial", [&](const Deadline& deadline) {
    const auto data = plant::synthetic_dataset(c.plant, c.dataset_size, c.seeds.dataset());
    const RmaeModel init = RmaeModel::create(c.plant.joints(), c.plant.muscles(), c.seeds.model());
    InitialTrainingOptions opt = c.training;
    opt.seed = c.seeds.training();
    opt.on_epoch = [&](const EpochStats&) { deadline.check(); };
    TrainingReport tr;
    RmaeModel m = train_initial(init, data, opt, &tr);

    std::vector<SensorTriple> train;
    std::vector<SensorTriple> test;
    split_dataset(data, opt.holdout_fraction, opt.seed, train, test);
    if (test.empty()) test = train;
    const ChannelErrors err = channel_errors(m, test);
    auto& r = ctx.report;
    r.metrics["train.error_theta"] = err.theta;
    r.metrics["train.error_tension"] = err.tension;
    r.metrics["train.error_length"] = err.length;
    r.metrics["train.best_epoch"] = tr.best_epoch;
    r.metrics["train.best_test_loss"] = tr.best_test_loss;
    r.checks.push_back(
        make_check("train.max_channel_error", err.max(), "<", c.checks.max_channel_error));
    r.labels["model_source"] = "trained";

    auto& log = ctx.sink.open("training.csv");
    CsvWriter w(log);
    w.header({"epoch", "train_loss", "test_loss"});
    for (const auto& e : tr.epochs) {
      w.field(e.epoch).field(e.train_loss).field(e.test_loss);
      w.end_row();
    }
    ctx.sink.write_file("model.bin", model_bytes(m));
    return m;
  });
}

SystemOptions base_options(const ScenarioConfig& c) {
  SystemOptions o = system_options(c);
  o.learning = true;
  return o;
}

// Online session on `system`; logs go to files named after `tag`.
SessionResult session(Context& ctx, System& system, double duration, const std::string& tag,
                      const Deadline& deadline) {
  system.set_deadline(deadline);
  auto& curve = ctx.sink.open(tag + "_curve.csv");
  write_curve_header(curve);
  SessionLogs logs{&curve, &ctx.sink.open(tag + "_anomaly.csv"),
                   &ctx.sink.open(tag + "_verification.jsonl")};
  return run_online_session(system, duration, ctx.config.cadence, logs);
}

void add_session(RunReport& r, const std::string& prefix, const SessionResult& s) {
  r.metrics[prefix + ".stored"] = static_cast<double>(s.stored);
  r.metrics[prefix + ".updates"] = static_cast<double>(s.updates);
  if (!s.curve.empty()) {
    const double first = s.curve.front().rmse_est;
    const double last = s.curve.back().rmse_est;
    r.metrics[prefix + ".curve_first"] = first;
    r.metrics[prefix + ".curve_last"] = last;
    r.metrics[prefix + ".learning_gain"] = last > 0.0 ? first / last : 0.0;
  }
  r.metrics[prefix + ".detections"] = s.first_detection ? 1.0 : 0.0;
  if (s.detection_latency) r.metrics[prefix + ".detection_latency"] = *s.detection_latency;
  double other_max = 0.0;
  for (Eigen::Index i = 0; i < s.max_d.size(); ++i) {
    r.metrics[prefix + ".max_d." + std::to_string(i)] = s.max_d[i];
    bool injected = false;
    for (const auto& inj : s.injections) injected = injected || inj.muscle == i;
    if (!injected) other_max = std::max(other_max, s.max_d[i]);
  }
  r.metrics[prefix + ".max_d_uninjected"] = other_max;
  for (const auto& inj : s.injections) {
    const double fe = s.first_exceed[static_cast<std::size_t>(inj.muscle)];
    r.metrics[prefix + ".exceed_latency." + std::to_string(inj.muscle)] =
        fe < 0.0 ? -1.0 : fe - inj.time;
  }
  for (const auto& v : s.verifications) r.verifications.push_back(v);
}

anomaly::Outcome expected_outcome(plant::Health h) {
  return h == plant::Health::WireCut ? anomaly::Outcome::Ruptured : anomaly::Outcome::OffsetUsable;
}

void check_learning_gain(Context& ctx, const std::string& prefix) {
  const auto it = ctx.report.metrics.find(prefix + ".learning_gain");
  const double gain = it == ctx.report.metrics.end() ? 0.0 : it->second;
  ctx.report.checks.push_back(
      make_check(prefix + ".learning_gain", gain, ">=", ctx.config.checks.min_learning_gain));
}

// A' < A < direct, each by the configured relative margin.
void check_estimator_order(Context& ctx, const std::string& prefix) {
  auto& m = ctx.report.metrics;
  const double keep = 1.0 - ctx.config.checks.min_estimator_gap;
  ctx.report.checks.push_back(make_check(prefix + ".a_prime_below_a",
                                         m[prefix + ".rmse_est_a_prime"], "<",
                                         keep * m[prefix + ".rmse_est_a"]));
  ctx.report.checks.push_back(make_check(prefix + ".a_below_direct", m[prefix + ".rmse_est_a"],
                                         "<", keep * m[prefix + ".rmse_est_direct"]));
}

std::vector<plant::RuptureInjection> shifted(const std::vector<plant::RuptureInjection>& v,
                                             double t0) {
  auto out = v;
  for (auto& inj : out) inj.time += t0;
  return out;
}

void cmd_train(Context& ctx) { obtain_model(ctx); }

void cmd_session(Context& ctx) {
  const auto& c = ctx.config;
  const RmaeModel model = obtain_model(ctx);
  stage(ctx, "online_session", [&](const Deadline& d) {
    System s(base_options(c), model, c.seeds.session());
    for (const auto& inj : shifted(c.injections, c.injection_delay)) s.schedule(inj);
    const auto res = session(ctx, s, c.session_duration, "session", d);
    add_session(ctx.report, "session", res);
    if (c.injections.empty()) check_learning_gain(ctx, "session");
    ctx.sink.write_file("model_learned.bin", model_bytes(*s.model()));
  });
}

void cmd_eval(Context& ctx) {
  const auto& c = ctx.config;
  const RmaeModel model = obtain_model(ctx);
  const int m = c.plant.muscles();
  const SystemOptions o = base_options(c);
  stage(ctx, "eval", [&](const Deadline&) {
    auto& log = ctx.sink.open("eval_healthy.csv");
    write_eval_header(log, c.plant.joints(), m);
    add_eval(ctx.report, "eval", evaluate_fresh(c, o, model, RuptureState::all_healthy(m),
                                                Vector::Zero(m), {}, &log));
  });
  if (c.injections.empty()) return;
  stage(ctx, "eval_rupture", [&](const Deadline&) {
    RuptureState r;
    Vector corr;
    oracle_knowledge(c.injections, m, r, corr);
    auto& log = ctx.sink.open("eval_rupture.csv");
    write_eval_header(log, c.plant.joints(), m);
    add_eval(ctx.report, "rupture",
             evaluate_fresh(c, o, model, r, corr, at_time_zero(c.injections), &log));
    if (has_wire_cut(c.injections)) check_estimator_order(ctx, "rupture");
  });
}

void cmd_rupture_demo(Context& ctx) {
  const auto& c = ctx.config;
  if (c.injections.empty()) throw std::invalid_argument("rupture-demo needs at least one injection");
  const RmaeModel model = obtain_model(ctx);
  SystemOptions o = base_options(c);
  o.detection = true;
  o.verification = c.verification;
  System s(o, model, c.seeds.session());
  stage(ctx, "warmup_session", [&](const Deadline& d) {
    const auto res = session(ctx, s, c.session_duration, "warmup", d);
    add_session(ctx.report, "warmup", res);
  });
  stage(ctx, "rupture_session", [&](const Deadline& d) {
    for (const auto& inj : shifted(c.injections, s.time() + c.injection_delay)) s.schedule(inj);
    const auto res = session(ctx, s, c.relearn_duration, "rupture", d);
    add_session(ctx.report, "rupture", res);
    auto& r = ctx.report;
    // every injected muscle must cross the threshold within 5 s; no other
    // muscle may cross it during either session
    for (const auto& inj : res.injections) {
      const auto key = "rupture.exceed_latency." + std::to_string(inj.muscle);
      const double latency = r.metrics[key];
      r.checks.push_back(make_check(key, latency < 0.0 ? 1e9 : latency, "<=", 5.0));
    }
    const double others =
        std::max(r.metrics["warmup.max_d_uninjected"], r.metrics["rupture.max_d_uninjected"]);
    r.checks.push_back(make_check("rupture.max_d_uninjected", others, "<", o.detector.threshold));
    if (o.verification) {
      for (const auto& inj : res.injections) {
        bool matched = false;
        for (const auto& v : res.verifications) {
          matched = matched || (v.muscle == inj.muscle && v.kind == expected_outcome(inj.kind));
        }
        r.checks.push_back(make_check("rupture.verified." + std::to_string(inj.muscle),
                                      matched ? 1.0 : 0.0, ">=", 1.0));
      }
    }
    ctx.sink.write_file("model_learned.bin", model_bytes(*s.model()));
  });
}

void cmd_full(Context& ctx) {
  const auto& c = ctx.config;
  const int m = c.plant.muscles();
  const RmaeModel model = obtain_model(ctx);
  SystemOptions o = base_options(c);
  auto& rep = ctx.report;
  const auto eval_log = [&](const std::string& name) -> std::ostream& {
    auto& os = ctx.sink.open("eval_" + name + ".csv");
    write_eval_header(os, c.plant.joints(), m);
    return os;
  };
  const RuptureState healthy = RuptureState::all_healthy(m);
  const Vector zero = Vector::Zero(m);

  stage(ctx, "eval_initial", [&](const Deadline&) {
    add_eval(rep, "initial", evaluate_fresh(c, o, model, healthy, zero, {}, &eval_log("initial")));
  });

  System s(o, model, c.seeds.session());
  stage(ctx, "healthy_session", [&](const Deadline& d) {
    add_session(rep, "healthy", session(ctx, s, c.session_duration, "healthy", d));
  });
  check_learning_gain(ctx, "healthy");
  const RmaeModel learned = *s.model();
  ctx.sink.write_file("model_learned.bin", model_bytes(learned));

  stage(ctx, "eval_pre_rupture", [&](const Deadline&) {
    add_eval(rep, "pre", evaluate_fresh(c, o, learned, healthy, zero, {}, &eval_log("pre")));
  });
  rep.checks.push_back(make_check("control.after_learning", rep.metrics["pre.rmse_control"], "<",
                                  rep.metrics["initial.rmse_control"]));
  if (c.injections.empty()) return;

  stage(ctx, "eval_rupture", [&](const Deadline&) {
    RuptureState r;
    Vector corr;
    oracle_knowledge(c.injections, m, r, corr);
    const auto inj = at_time_zero(c.injections);
    add_eval(rep, "rupture", evaluate_fresh(c, o, learned, r, corr, inj, &eval_log("rupture")));
    SystemOptions blind = o;
    blind.use_rupture.control = false;
    add_eval(rep, "rupture_without_r",
             evaluate_fresh(c, blind, learned, r, corr, inj, &eval_log("rupture_without_r")));
  });
  if (has_wire_cut(c.injections)) {
    check_estimator_order(ctx, "rupture");
    rep.checks.push_back(make_check("control.with_r", rep.metrics["rupture.rmse_control"], "<",
                                    rep.metrics["rupture_without_r.rmse_control"]));
  }

  // Twins share the state and random streams at the moment of the rupture.
  System no_verify = s;
  no_verify.options().verification = false;
  System no_r = s;
  no_r.options().use_rupture = {false, false, false};
  const auto injections = shifted(c.injections, s.time() + c.injection_delay);
  const auto relearn = [&](System& sys, const std::string& tag, const std::string& post) {
    stage(ctx, tag + "_session", [&](const Deadline& d) {
      for (const auto& inj : injections) sys.schedule(inj);
      add_session(rep, tag, session(ctx, sys, c.relearn_duration, tag, d));
    });
    stage(ctx, "eval_" + post, [&](const Deadline&) {
      add_eval(rep, post,
               evaluate_fresh(c, sys.options(), *sys.model(), sys.adaptive().rupture,
                              sys.adaptive().length_correction, at_time_zero(c.injections),
                              &eval_log(post)));
    });
  };
  relearn(s, "relearn", "post");
  relearn(no_verify, "relearn_no_verification", "post_no_verification");
  relearn(no_r, "relearn_without_r", "post_without_r");
  ctx.sink.write_file("model_relearned.bin", model_bytes(*s.model()));

  // A' against its own pre-rupture value and against the twin that never knew r.
  rep.checks.push_back(make_check("relearn.a_prime_vs_pre", rep.metrics["post.rmse_est_a_prime"],
                                  "<=",
                                  c.checks.max_relearn_ratio * rep.metrics["pre.rmse_est_a_prime"]));
  rep.checks.push_back(make_check("relearn.a_prime_vs_without_r",
                                  rep.metrics["post.rmse_est_a_prime"], "<",
                                  rep.metrics["post_without_r.rmse_est_a_prime"]));
  rep.metrics["relearn.control_ratio"] =
      rep.metrics["post.rmse_control"] / rep.metrics["pre.rmse_control"];
  rep.checks.push_back(make_check("verification.control_gain", rep.metrics["post.rmse_control"],
                                  "<", rep.metrics["post_no_verification.rmse_control"]));
}

std::string timing_json(const std::map<std::string, double>& wall) {
  return nlohmann::json(wall).dump(2) + "\n";
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::TrainInitial: return "train-initial";
    case Command::OnlineSession: return "online-session";
    case Command::Eval: return "eval";
    case Command::RuptureDemo: return "rupture-demo";
    case Command::FullPipeline: return "full-pipeline";
  }
  return "?";
}

Command parse_command(std::string_view name) {
  for (const auto c : {Command::TrainInitial, Command::OnlineSession, Command::Eval,
                       Command::RuptureDemo, Command::FullPipeline}) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

MetricsSummary evaluate_fresh(const ScenarioConfig& config, const SystemOptions& options,
                              const RmaeModel& model, const RuptureState& rupture,
                              const Vector& length_correction,
                              const std::vector<plant::RuptureInjection>& injections,
                              std::ostream* log) {
  SystemOptions o = options;
  o.learning = false;
  o.detection = false;
  o.verification = false;
  System s(o, model, config.seeds.eval_targets());
  s.adaptive().rupture = rupture;
  s.adaptive().length_correction = length_correction;
  for (auto inj : injections) {
    inj.time = s.time();
    plant::inject_rupture(s.plant(), o.plant, inj);
  }
  return run_eval_sequence(s, config.eval, config.estimator,
                           {config.seeds.eval_targets(), false, log});
}

RunReport run_command(Command command, const ScenarioConfig& config,
                      const std::filesystem::path& out_dir) {
  config.validate();
  RunReport report;
  report.command = std::string(to_string(command));
  report.scenario = config.name;
  report.seed = config.seeds.base;
  report.config_hash = config_hash(config);
  report.labels["plant"] = config.plant_ref;
  report.labels["profile"] = config.profile;
  report.labels["estimator"] = std::string(control::to_string(config.estimator));

  ArtifactSink sink(out_dir);
  sink.write_file("config.json", scenario_to_json(config) + "\n");
  Context ctx{config, report, sink, {}};
  const auto finish = [&]() {
    sink.write_file("timing.json", timing_json(ctx.wall));
    sink.flush();
    report.artifacts = sink.names();
    emit_report(out_dir, report);
  };
  try {
    switch (command) {
      case Command::TrainInitial: cmd_train(ctx); break;
      case Command::OnlineSession: cmd_session(ctx); break;
      case Command::Eval: cmd_eval(ctx); break;
      case Command::RuptureDemo: cmd_rupture_demo(ctx); break;
      case Command::FullPipeline: cmd_full(ctx); break;
    }
  } catch (...) {
    finish();
    throw;
  }
  finish();
  return report;
}

int exit_code(const RunReport& report) { return report.checks_passed() ? 0 : 2; }

}  // namespace musculo::harness
