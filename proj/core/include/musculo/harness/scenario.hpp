#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "musculo/harness/protocols.hpp"
#include "musculo/harness/system.hpp"
#include "musculo/rmae/training.hpp"

namespace musculo::harness {

/// Derived seeds of one run. Every random stream of a stage comes from here.
struct Seeds {
  std::uint64_t base = 1;

  std::uint64_t model() const { return base; }
  std::uint64_t dataset() const { return base + 1; }
  std::uint64_t training() const { return base + 2; }
  std::uint64_t session() const { return base + 3; }
  std::uint64_t eval_targets() const { return base + 4; }
  std::uint64_t twin() const { return base + 5; }
};

/// Pass/fail limits checked after each stage; a miss exits with code 2.
struct StageChecks {
  double max_channel_error = 0.01;  // initial training, network units
  double min_learning_gain = 2.0;   // first/last learning-curve bucket
  double min_estimator_gap = 0.1;   // relative margin of A' < A < direct under rupture
  double max_relearn_ratio = 1.2;   // post-relearn A' / pre-rupture A'
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string plant_ref = "elbow";  // "elbow", "planar_arm" or a plant JSON file
  plant::PlantConfig plant;
  Seeds seeds;

  int dataset_size = 3000;
  InitialTrainingOptions training;
  std::string model_path;  // checkpoint that replaces initial training when set

  std::string profile = "sim";
  EvalProtocol eval;
  SessionCadence cadence;
  double session_duration = 240.0;  // s, healthy online learning
  double relearn_duration = 120.0;  // s, after the rupture
  double injection_delay = 10.0;    // s into the relearn session

  std::vector<plant::RuptureInjection> injections;  // times relative to the relearn session
  control::EstimatorKind estimator = control::EstimatorKind::Direct;
  RuptureUse use_rupture;
  bool detection = true;
  bool verification = true;
  double online_learning_rate = 3e-4;
  int threshold_after_rupture = 2;

  StageChecks checks;
  std::filesystem::path base_dir;  // where relative references resolve

  void validate() const;
};

ScenarioConfig default_scenario();

/// Parses a scenario; unspecified keys keep default_scenario() values.
/// Relative file references resolve against base_dir.
ScenarioConfig scenario_from_json(const std::string& text, const std::filesystem::path& base_dir);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, fully resolved plant) of the configuration.
std::string scenario_to_json(const ScenarioConfig& config);

/// FNV-1a 64 of scenario_to_json.
std::uint64_t config_hash(const ScenarioConfig& config);

/// System options implied by the scenario.
SystemOptions system_options(const ScenarioConfig& config);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace musculo::harness
