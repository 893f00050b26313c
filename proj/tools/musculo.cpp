#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "musculo/harness/pipeline.hpp"

namespace h = musculo::harness;

namespace {

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string model;
};

void print_checks(const h::RunReport& report) {
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.value << ' ' << c.relation
              << ' ' << c.limit << '\n';
  }
}

int run(h::Command command, const Args& args) {
  h::ScenarioConfig config =
      args.config.empty() ? h::default_scenario() : h::load_scenario(args.config);
  if (args.seed) config.seeds.base = *args.seed;
  if (!args.model.empty()) config.model_path = std::filesystem::absolute(args.model).string();
  const h::RunReport report = h::run_command(command, config, args.out);
  print_checks(report);
  std::cout << "summary: " << (std::filesystem::path(args.out) / "summary.json").string() << '\n';
  return h::exit_code(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rupture-robust musculoskeletal learning-control experiments"};
  app.require_subcommand(1);
  Args args;
  std::optional<h::Command> chosen;

  for (const auto command : {h::Command::TrainInitial, h::Command::OnlineSession, h::Command::Eval,
                             h::Command::RuptureDemo, h::Command::FullPipeline}) {
    auto* sub = app.add_subcommand(std::string(h::to_string(command)));
    sub->add_option("--config", args.config, "scenario JSON (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory")->required();
    sub->add_option("--seed", args.seed, "base seed, overrides the scenario");
    sub->add_option("--model", args.model, "initial model checkpoint, skips training")
        ->check(CLI::ExistingFile);
    sub->callback([&chosen, command] { chosen = command; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(*chosen, args);
  } catch (const h::StageTimeout& e) {
    std::cerr << "timeout: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}
