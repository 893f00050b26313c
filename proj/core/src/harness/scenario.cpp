#include "musculo/harness/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace musculo::harness {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

plant::Health parse_kind(const std::string& s) {
  if (s == "wire_cut") return plant::Health::WireCut;
  if (s == "endpoint_offset") return plant::Health::EndpointOffset;
  throw std::invalid_argument("unknown rupture kind '" + s + "' (expected wire_cut or endpoint_offset)");
}

std::string kind_name(plant::Health h) {
  switch (h) {
    case plant::Health::WireCut: return "wire_cut";
    case plant::Health::EndpointOffset: return "endpoint_offset";
    case plant::Health::Healthy: break;
  }
  return "healthy";
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& ref) {
  const std::filesystem::path p(ref);
  return p.is_absolute() || base.empty() ? p : base / p;
}

void apply_profile(ScenarioConfig& c, const std::string& profile) {
  if (profile == "sim") {
    c.eval = EvalProtocol::sim();
    c.cadence = SessionCadence::sim();
  } else if (profile == "robot") {
    c.eval = EvalProtocol::robot();
    c.cadence = SessionCadence::robot();
  } else {
    throw std::invalid_argument("unknown profile '" + profile + "' (expected sim or robot)");
  }
  c.profile = profile;
}

}  // namespace

void ScenarioConfig::validate() const {
  plant.validate();
  eval.validate();
  cadence.validate();
  if (dataset_size < 1) throw std::invalid_argument("scenario: dataset_size must be >= 1");
  if (training.epochs < 1 || training.batch_size < 1) {
    throw std::invalid_argument("scenario: training epochs and batch size must be >= 1");
  }
  for (const double v : {session_duration, relearn_duration, injection_delay}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("scenario: durations must be >= 0");
    }
  }
  if (!(online_learning_rate > 0.0)) throw std::invalid_argument("scenario: online learning rate");
  if (threshold_after_rupture < 1) throw std::invalid_argument("scenario: threshold_after_rupture");
  for (const auto& inj : injections) {
    if (inj.muscle < 0 || inj.muscle >= plant.muscles()) {
      throw std::invalid_argument("scenario: injection muscle index out of range");
    }
    if (!(inj.time >= 0.0)) throw std::invalid_argument("scenario: injection time must be >= 0");
    if (inj.kind == plant::Health::EndpointOffset && !(inj.offset_mm > 0.0)) {
      throw std::invalid_argument("scenario: endpoint offset must be positive");
    }
  }
  if (!model_path.empty() && !std::filesystem::exists(resolve(base_dir, model_path))) {
    throw std::invalid_argument("scenario: model file not found: " + model_path);
  }
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.plant = plant::default_elbow_config();
  c.training.epochs = 1100;
  c.training.batch_size = 10;
  c.training.adam.learning_rate = 3e-3;
  c.training.final_learning_rate = 1e-5;
  c.injections = {{1, plant::Health::WireCut, 0.0, 0.0}};
  return c;
}

ScenarioConfig scenario_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: malformed JSON: ") + e.what());
  }
  ScenarioConfig c = default_scenario();
  c.base_dir = base_dir;
  try {
    read_opt(j, "name", c.name);
    if (j.contains("plant")) {
      const auto& p = j.at("plant");
      if (p.is_string()) {
        c.plant_ref = p.get<std::string>();
        if (c.plant_ref == "elbow") {
          c.plant = plant::default_elbow_config();
        } else if (c.plant_ref == "planar_arm") {
          c.plant = plant::planar_arm_config();
        } else {
          const auto path = resolve(base_dir, c.plant_ref);
          if (!std::filesystem::exists(path)) {
            throw std::invalid_argument("scenario: plant file not found: " + path.string());
          }
          c.plant = plant::load_plant_config(path);
        }
      } else {
        // a snapshot keeps the name it was resolved from
        c.plant_ref = j.value("plant_ref", std::string("inline"));
        c.plant = plant::plant_config_from_json(p.dump());
      }
    }
    if (j.contains("seed")) c.seeds.base = j.at("seed").get<std::uint64_t>();
    read_opt(j, "dataset_size", c.dataset_size);
    if (j.contains("training")) {
      const auto& t = j.at("training");
      read_opt(t, "epochs", c.training.epochs);
      read_opt(t, "batch_size", c.training.batch_size);
      read_opt(t, "learning_rate", c.training.adam.learning_rate);
      read_opt(t, "final_learning_rate", c.training.final_learning_rate);
      read_opt(t, "holdout", c.training.holdout_fraction);
    }
    read_opt(j, "model", c.model_path);
    if (j.contains("profile")) apply_profile(c, j.at("profile").get<std::string>());
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      read_opt(e, "n_targets", c.eval.n_targets);
      read_opt(e, "move", c.eval.move_duration);
      read_opt(e, "rest", c.eval.rest_duration);
      read_opt(e, "window", c.eval.total_window);
    }
    if (j.contains("session")) {
      const auto& s = j.at("session");
      read_opt(s, "duration", c.session_duration);
      read_opt(s, "relearn", c.relearn_duration);
      read_opt(s, "injection_delay", c.injection_delay);
      read_opt(s, "control_move", c.cadence.control_move);
      read_opt(s, "control_rest", c.cadence.control_rest);
      read_opt(s, "explore_move", c.cadence.explore_move);
      read_opt(s, "explore_rest", c.cadence.explore_rest);
      read_opt(s, "bucket", c.cadence.bucket);
    }
    if (j.contains("injections")) {
      c.injections.clear();
      for (const auto& i : j.at("injections")) {
        plant::RuptureInjection inj;
        inj.muscle = i.at("muscle").get<int>();
        inj.kind = parse_kind(i.value("kind", std::string("wire_cut")));
        inj.offset_mm = i.value("offset", 0.0);
        inj.time = i.value("time", 0.0);
        c.injections.push_back(inj);
      }
    }
    if (j.contains("estimator")) {
      c.estimator = control::parse_estimator(j.at("estimator").get<std::string>());
    }
    if (j.contains("use_rupture_info")) {
      const auto& u = j.at("use_rupture_info");
      read_opt(u, "learning", c.use_rupture.learning);
      read_opt(u, "control", c.use_rupture.control);
      read_opt(u, "estimation", c.use_rupture.estimation);
    }
    read_opt(j, "detection", c.detection);
    read_opt(j, "verification", c.verification);
    if (j.contains("online")) {
      const auto& o = j.at("online");
      read_opt(o, "learning_rate", c.online_learning_rate);
      read_opt(o, "threshold_after_rupture", c.threshold_after_rupture);
    }
    if (j.contains("checks")) {
      const auto& k = j.at("checks");
      read_opt(k, "max_channel_error", c.checks.max_channel_error);
      read_opt(k, "min_learning_gain", c.checks.min_learning_gain);
      read_opt(k, "min_estimator_gap", c.checks.min_estimator_gap);
      read_opt(k, "max_relearn_ratio", c.checks.max_relearn_ratio);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open scenario " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return scenario_from_json(ss.str(), path.parent_path());
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json inj = json::array();
  for (const auto& i : c.injections) {
    inj.push_back({{"muscle", i.muscle}, {"kind", kind_name(i.kind)}, {"offset", i.offset_mm},
                   {"time", i.time}});
  }
  json j = {
      {"name", c.name},
      {"plant_ref", c.plant_ref},
      {"plant", json::parse(plant::plant_config_to_json(c.plant))},
      {"seed", c.seeds.base},
      {"dataset_size", c.dataset_size},
      {"training",
       {{"epochs", c.training.epochs},
        {"batch_size", c.training.batch_size},
        {"learning_rate", c.training.adam.learning_rate},
        {"final_learning_rate", c.training.final_learning_rate},
        {"holdout", c.training.holdout_fraction}}},
      {"model", c.model_path},
      {"profile", c.profile},
      {"eval",
       {{"n_targets", c.eval.n_targets},
        {"move", c.eval.move_duration},
        {"rest", c.eval.rest_duration},
        {"window", c.eval.total_window}}},
      {"session",
       {{"duration", c.session_duration},
        {"relearn", c.relearn_duration},
        {"injection_delay", c.injection_delay},
        {"control_move", c.cadence.control_move},
        {"control_rest", c.cadence.control_rest},
        {"explore_move", c.cadence.explore_move},
        {"explore_rest", c.cadence.explore_rest},
        {"bucket", c.cadence.bucket}}},
      {"injections", inj},
      {"estimator", std::string(control::to_string(c.estimator))},
      {"use_rupture_info",
       {{"learning", c.use_rupture.learning},
        {"control", c.use_rupture.control},
        {"estimation", c.use_rupture.estimation}}},
      {"detection", c.detection},
      {"verification", c.verification},
      {"online",
       {{"learning_rate", c.online_learning_rate},
        {"threshold_after_rupture", c.threshold_after_rupture}}},
      {"checks",
       {{"max_channel_error", c.checks.max_channel_error},
        {"min_learning_gain", c.checks.min_learning_gain},
        {"min_estimator_gap", c.checks.min_estimator_gap},
        {"max_relearn_ratio", c.checks.max_relearn_ratio}}},
  };
  return j.dump(2);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t config_hash(const ScenarioConfig& config) {
  return fnv1a64(scenario_to_json(config));
}

SystemOptions system_options(const ScenarioConfig& c) {
  SystemOptions o;
  o.plant = c.plant;
  o.use_rupture = c.use_rupture;
  o.estimator = c.estimator;
  o.detection = c.detection;
  o.verification = c.verification;
  o.update.adam.learning_rate = c.online_learning_rate;
  o.threshold_after_rupture = c.threshold_after_rupture;
  return o;
}

}  // namespace musculo::harness
