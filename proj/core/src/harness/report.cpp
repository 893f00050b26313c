#include "musculo/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "musculo/harness/csv.hpp"

namespace musculo::harness {

using nlohmann::json;

CheckResult make_check(std::string name, double value, std::string relation, double limit) {
  CheckResult c{std::move(name), value, limit, std::move(relation), false};
  if (std::isfinite(value)) {
    if (c.relation == "<") c.passed = value < limit;
    else if (c.relation == "<=") c.passed = value <= limit;
    else if (c.relation == ">") c.passed = value > limit;
    else if (c.relation == ">=") c.passed = value >= limit;
    else throw std::invalid_argument("make_check: unknown relation " + c.relation);
  }
  return c;
}

bool RunReport::checks_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

bool RunReport::stages_ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const auto& s) { return s.status == "ok"; });
}

namespace {

json number(double v) {
  // JSON has no NaN or infinity
  if (!std::isfinite(v)) return format_number(v);
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string summary_json(const RunReport& r) {
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = number(v);
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"value", number(c.value)},
                      {"relation", c.relation},
                      {"limit", number(c.limit)},
                      {"passed", c.passed}});
  }
  json stages = json::array();
  for (const auto& s : r.stages) {
    stages.push_back({{"name", s.name}, {"status", s.status}, {"error", s.error}});
  }
  json ver = json::array();
  for (const auto& v : r.verifications) {
    ver.push_back({{"muscle", v.muscle},
                   {"outcome", std::string(anomaly::to_string(v.kind))},
                   {"delta_f", number(v.delta_f)},
                   {"slack", number(v.slack)},
                   {"corrected_origin", number(v.corrected_origin)},
                   {"started", number(v.started)},
                   {"finished", number(v.finished)}});
  }
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.config_hash));
  const json j = {
      {"command", r.command},
      {"scenario", r.scenario},
      {"seed", r.seed},
      {"config_hash", hash},
      {"metrics", metrics},
      {"labels", r.labels},
      {"stages", stages},
      {"checks", checks},
      {"checks_passed", r.checks_passed()},
      {"verifications", ver},
      {"artifacts", r.artifacts},
  };
  return j.dump(2) + "\n";
}

void emit_report(const std::filesystem::path& out_dir, const RunReport& report) {
  for (const auto& a : report.artifacts) {
    if (!std::filesystem::exists(out_dir / a)) {
      throw std::runtime_error("emit_report: missing artifact " + (out_dir / a).string());
    }
  }
  write_text(out_dir / "summary.json", summary_json(report));
  std::ostringstream csv;
  CsvWriter w(csv);
  w.header({"metric", "value"});
  for (const auto& [k, v] : report.metrics) {
    w.field(k).field(v);
    w.end_row();
  }
  write_text(out_dir / "metrics.csv", csv.str());
}

ArtifactSink::ArtifactSink(std::filesystem::path out_dir) : dir_(std::move(out_dir)) {
  std::filesystem::create_directories(dir_);
}

std::ostream& ArtifactSink::open(const std::string& name) {
  auto& slot = buffers_[name];
  if (!slot) slot = std::make_unique<std::ostringstream>();
  return *slot;
}

void ArtifactSink::write_file(const std::string& name, const std::string& contents) {
  auto& slot = buffers_[name];
  slot = std::make_unique<std::ostringstream>();
  *slot << contents;
}

void ArtifactSink::flush() {
  for (const auto& [name, buf] : buffers_) write_text(dir_ / name, buf->str());
}

std::vector<std::string> ArtifactSink::names() const {
  std::vector<std::string> out;
  for (const auto& [name, buf] : buffers_) out.push_back(name);
  return out;
}

}  // namespace musculo::harness
