#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "musculo/anomaly/verification.hpp"

namespace musculo::harness {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  std::string relation;  // "<", "<=", ">" or ">="
  bool passed = false;
};

CheckResult make_check(std::string name, double value, std::string relation, double limit);

struct StageRecord {
  std::string name;
  std::string status;  // "ok" or "failed"
  std::string error;
};

struct RunReport {
  std::string command;
  std::string scenario;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> labels;
  std::vector<StageRecord> stages;
  std::vector<CheckResult> checks;
  std::vector<anomaly::VerificationOutcome> verifications;
  std::vector<std::string> artifacts;  // file names inside the output directory

  bool checks_passed() const;
  bool stages_ok() const;
};

/// Summary JSON with sorted keys and no wall-clock data, so identical runs
/// give identical bytes.
std::string summary_json(const RunReport& report);

/// Writes summary.json and metrics.csv into out_dir. Every listed artifact
/// must already exist there; throws std::runtime_error naming the first
/// missing one. Re-emitting the same report rewrites identical bytes.
void emit_report(const std::filesystem::path& out_dir, const RunReport& report);

/// In-memory log buffers written out in one go, so the control loop never
/// waits on file I/O. Buffers are flushed even when a stage fails.
class ArtifactSink {
 public:
  explicit ArtifactSink(std::filesystem::path out_dir);

  std::ostream& open(const std::string& name);
  void write_file(const std::string& name, const std::string& contents);
  /// Writes every buffer to its file.
  void flush();
  std::vector<std::string> names() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::unique_ptr<std::ostringstream>> buffers_;
};

}  // namespace musculo::harness
