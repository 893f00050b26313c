#pragma once

#include <filesystem>
#include <string_view>

#include "musculo/harness/report.hpp"
#include "musculo/harness/scenario.hpp"

namespace musculo::harness {

enum class Command { TrainInitial, OnlineSession, Eval, RuptureDemo, FullPipeline };

std::string_view to_string(Command command);
/// Accepts the CLI names (train-initial, online-session, eval, rupture-demo,
/// full-pipeline); throws std::invalid_argument otherwise.
Command parse_command(std::string_view name);

/// Runs one command and writes its artifacts, summary.json, metrics.csv and
/// timing.json (wall-clock seconds per stage) into out_dir. Stage failures
/// are recorded in the report and rethrown after the buffers are flushed.
/// MUSCULO_STAGE_TIMEOUT_S bounds the wall-clock time of every stage.
RunReport run_command(Command command, const ScenarioConfig& config,
                      const std::filesystem::path& out_dir);

/// 0 when every check passed, 2 otherwise.
int exit_code(const RunReport& report);

/// Evaluation on a fresh system carrying the given rupture knowledge and
/// length correction, with `injections` applied to the plant before the
/// first tick. Exposed for tests.
MetricsSummary evaluate_fresh(const ScenarioConfig& config, const SystemOptions& options,
                              const RmaeModel& model, const RuptureState& rupture,
                              const Vector& length_correction,
                              const std::vector<plant::RuptureInjection>& injections,
                              std::ostream* log = nullptr);

}  // namespace musculo::harness
