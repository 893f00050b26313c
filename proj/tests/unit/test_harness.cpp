#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "musculo/harness/csv.hpp"
#include "musculo/harness/pipeline.hpp"
#include "musculo/harness/protocols.hpp"
#include "musculo/harness/report.hpp"
#include "musculo/harness/scenario.hpp"

using namespace musculo;
using namespace musculo::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("musculo_test_" + name);
  fs::remove_all(p);
  return p;
}

ScenarioConfig tiny_scenario() {
  ScenarioConfig c = default_scenario();
  c.dataset_size = 60;
  c.training.epochs = 3;
  c.session_duration = 3.0;
  c.relearn_duration = 3.0;
  c.injection_delay = 0.5;
  c.eval.n_targets = 1;
  c.eval.total_window = 2.5;
  return c;
}

}  // namespace

TEST_CASE("CSV quoting follows RFC 4180") {
  CHECK(CsvWriter::quote("plain") == "plain");
  CHECK(CsvWriter::quote("a,b") == "\"a,b\"");
  CHECK(CsvWriter::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(CsvWriter::quote("two\nlines") == "\"two\nlines\"");
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"x", "y,z"});
  w.field(1.5).field("q");
  w.end_row();
  CHECK(os.str() == "x,\"y,z\"\r\n1.5,q\r\n");
}

TEST_CASE("numbers print in the shortest round-trip form") {
  for (const double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("checks compare with the stated relation and fail on NaN") {
  CHECK(make_check("a", 1.0, "<", 2.0).passed);
  CHECK_FALSE(make_check("a", 2.0, "<", 2.0).passed);
  CHECK(make_check("a", 2.0, "<=", 2.0).passed);
  CHECK(make_check("a", 3.0, ">=", 2.0).passed);
  CHECK_FALSE(make_check("a", std::nan(""), ">", 0.0).passed);
  CHECK_THROWS_AS(make_check("a", 1.0, "==", 1.0), std::invalid_argument);
}

TEST_CASE("report emission is idempotent and needs its artifacts") {
  const fs::path dir = scratch("emit");
  RunReport r;
  r.command = "eval";
  r.metrics["b"] = 2.0;
  r.metrics["a"] = 0.1;
  r.checks.push_back(make_check("c", 1.0, "<", 2.0));
  r.artifacts = {"log.csv"};
  fs::create_directories(dir);
  CHECK_THROWS_AS(emit_report(dir, r), std::runtime_error);
  std::ofstream(dir / "log.csv") << "x\n";
  emit_report(dir, r);
  const std::string first = slurp(dir / "summary.json");
  emit_report(dir, r);
  CHECK(slurp(dir / "summary.json") == first);
  CHECK(first.find("\"a\": 0.1") < first.find("\"b\": 2.0"));
  CHECK(slurp(dir / "metrics.csv") == "metric,value\r\na,0.1\r\nb,2\r\n");
}

TEST_CASE("artifact sink writes buffered logs on flush") {
  const fs::path dir = scratch("sink");
  ArtifactSink sink(dir);
  sink.open("a.csv") << "1\n";
  CHECK_FALSE(fs::exists(dir / "a.csv"));
  sink.open("a.csv") << "2\n";
  sink.write_file("b.txt", "x");
  sink.flush();
  CHECK(slurp(dir / "a.csv") == "1\n2\n");
  CHECK(sink.names() == std::vector<std::string>{"a.csv", "b.txt"});
}

TEST_CASE("scenario JSON round trips and the hash follows the seeds") {
  ScenarioConfig c = default_scenario();
  c.injections.push_back({2, plant::Health::EndpointOffset, 57.0, 3.0});
  const ScenarioConfig back = scenario_from_json(scenario_to_json(c), {});
  CHECK(scenario_to_json(back) == scenario_to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  ScenarioConfig other = c;
  other.seeds.base += 1;
  CHECK(config_hash(other) != config_hash(c));
  other = c;
  other.plant.f_bias += 1.0;
  CHECK(config_hash(other) != config_hash(c));
}

TEST_CASE("scenario validation") {
  ScenarioConfig c = default_scenario();
  c.model_path = "does/not/exist.bin";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_scenario();
  c.injections = {{7, plant::Health::WireCut, 0.0, 0.0}};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_scenario();
  c.eval.move_duration = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS(scenario_from_json("{\"estimator\": \"b\"}", {}));
}

TEST_CASE("deadline expires after its budget") {
  const Deadline none("s", 0.0);
  CHECK_NOTHROW(none.check());
  const Deadline tight("s", 1e-3);
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  CHECK_THROWS_AS(tight.check(), StageTimeout);
}

TEST_CASE("command names") {
  for (const auto c : {Command::TrainInitial, Command::OnlineSession, Command::Eval,
                       Command::RuptureDemo, Command::FullPipeline}) {
    CHECK(parse_command(to_string(c)) == c);
  }
  CHECK_THROWS_AS(parse_command("train"), std::invalid_argument);
}

TEST_CASE("evaluation leaves the model untouched and is repeatable") {
  const ScenarioConfig c = tiny_scenario();
  const RmaeModel model = RmaeModel::create(1, 3, 4);
  const SystemOptions o = system_options(c);
  System s(o, model, 5);
  const auto m = run_eval_sequence(s, c.eval, control::EstimatorKind::Direct);
  CHECK(m.checksum_before == m.checksum_after);
  CHECK(m.checksum_before == model.checksum());
  CHECK(m.rmse_est >= 0.0);
  CHECK(m.rmse_control >= 0.0);
  CHECK(m.targets.size() == 1);

  System oracle(o, model, 5);
  EvalOptions eo;
  eo.oracle_estimator = true;
  CHECK(run_eval_sequence(oracle, c.eval, control::EstimatorKind::Direct, eo).rmse_est == 0.0);

  const auto a = evaluate_fresh(c, o, model, RuptureState::all_healthy(3), Vector::Zero(3), {});
  const auto b = evaluate_fresh(c, o, model, RuptureState::all_healthy(3), Vector::Zero(3), {});
  CHECK(a.rmse_est_a_prime == b.rmse_est_a_prime);
  CHECK(a.rmse_control == b.rmse_control);
}

TEST_CASE("a zero-length session changes nothing") {
  const ScenarioConfig c = tiny_scenario();
  System s(system_options(c), RmaeModel::create(1, 3, 4), 5);
  const auto before = s.model()->checksum();
  const double t = s.time();
  const auto res = run_online_session(s, 0.0, c.cadence);
  CHECK(res.updates == 0);
  CHECK(res.curve.empty());
  CHECK(s.time() == t);
  CHECK(s.model()->checksum() == before);
}

TEST_CASE("identical configs give identical summaries") {
  const ScenarioConfig c = tiny_scenario();
  const fs::path a = scratch("repro_a");
  const fs::path b = scratch("repro_b");
  run_command(Command::TrainInitial, c, a);
  run_command(Command::TrainInitial, c, b);
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  CHECK(slurp(a / "model.bin") == slurp(b / "model.bin"));
  CHECK(fs::exists(a / "config.json"));
  CHECK(fs::exists(a / "timing.json"));

  ScenarioConfig s = c;
  s.model_path = (a / "model.bin").string();
  const fs::path sa = scratch("session_a");
  const fs::path sb = scratch("session_b");
  run_command(Command::OnlineSession, s, sa);
  run_command(Command::OnlineSession, s, sb);
  CHECK(slurp(sa / "summary.json") == slurp(sb / "summary.json"));
  CHECK(slurp(sa / "model_learned.bin") == slurp(sb / "model_learned.bin"));
}

TEST_CASE("stage timeout is reported as a failed stage") {
  ScenarioConfig c = tiny_scenario();
  c.training.epochs = 100000;
  const fs::path dir = scratch("timeout");
  setenv(kStageTimeoutEnv, "0.2", 1);
  CHECK_THROWS_AS(run_command(Command::TrainInitial, c, dir), StageTimeout);
  unsetenv(kStageTimeoutEnv);
  const std::string summary = slurp(dir / "summary.json");
  CHECK(summary.find("\"status\": \"failed\"") != std::string::npos);
  CHECK(summary.find("train_initial") != std::string::npos);
}
