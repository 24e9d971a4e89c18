// Scenario runner, fuzzer and oracle front end.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "hush/relay/config.hpp"
#include "hush/sim/fuzz.hpp"
#include "hush/sim/leak_scan.hpp"
#include "hush/sim/oracle.hpp"
#include "hush/sim/runner.hpp"
#include "hush/sim/shadow.hpp"

namespace {

using namespace hush::sim;

int run_command(const std::string& scenario_path, const std::string& live, const std::string& out_path) {
  const Scenario scenario = load_scenario(scenario_path);
  RunMode mode = InProcess{};
  if (!live.empty()) {
    auto address = hush::relay::parse_listen_address(live);
    if (!address) {
      std::cerr << "hushsim: --live must look like host:port\n";
      return 2;
    }
    mode = Live{address->host, address->port};
  }
  const Transcript transcript = run_scenario(scenario, mode);
  const std::string text = serialize(transcript);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out_path) << text;
  }

  const ShadowTimeline timeline = replay_shadow(scenario, transcript);
  std::size_t speaks = 0;
  const auto routing = check_routing(scenario, transcript, timeline, &speaks);
  const LeakReport leaks = leak_scan(transcript, channel_history(timeline));
  for (const auto& f : routing) {
    std::cerr << "routing: " << f.detail << '\n';
  }
  for (const auto& v : leaks.violations) {
    std::cerr << "leak: record " << v.offset << " to " << v.recipient << ": " << v.reason << '\n';
  }
  std::cerr << "hushsim: " << transcript.records.size() << " deliveries, " << speaks << " speak(s) checked, "
            << routing.size() << " routing mismatch(es), " << leaks.violations.size() << " leak(s)\n";
  return routing.empty() && leaks.clean() ? 0 : 1;
}

int fuzz_command(const FuzzOptions& options) {
  const FuzzSummary summary = fuzz(options);
  std::cout << "scenarios run: " << summary.run << ", passed: " << summary.passed
            << ", speaks checked: " << summary.speaks_checked << ", records scanned: " << summary.records_scanned
            << '\n';
  for (const auto& failure : summary.failures) {
    std::cout << "FAIL scenario " << failure.index << " (seed " << failure.original.seed << "), minimal form has "
              << failure.minimal.actions.size() << " action(s)\n";
    for (const auto& f : failure.failures) {
      std::cout << "  " << f.check << ": " << f.detail << '\n';
    }
    if (failure.written) {
      std::cout << "  minimal scenario written to " << failure.written->string() << '\n';
    } else {
      std::cout << to_json(failure.minimal).dump(2) << '\n';
    }
  }
  return summary.ok() ? 0 : 1;
}

int oracle_command(const std::string& state_path, const std::string& speaker) {
  std::ifstream in(state_path);
  if (!in) {
    std::cerr << "hushsim: cannot read " << state_path << '\n';
    return 2;
  }
  const OracleState state = oracle_state_from_json(nlohmann::json::parse(in));
  const auto recipients = oracle_recipients(state, speaker);
  std::cout << nlohmann::json(recipients).dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hushsim - deterministic scenarios, audibility oracle and privacy fuzzing"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string live;
  std::string out_path;
  auto* run = app.add_subcommand("run", "Run a scenario and print its transcript");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--live", live, "Drive a running server at host:port instead of an in-process relay");
  run->add_option("--out", out_path, "Write the transcript here instead of stdout");

  FuzzOptions options;
  std::string failure_dir;
  std::vector<std::string> faults;
  auto* fuzz_cmd = app.add_subcommand("fuzz", "Run seeded random scenarios through every check");
  fuzz_cmd->add_option("--seed", options.seed, "Base seed")->required();
  fuzz_cmd->add_option("--count", options.count, "Number of scenarios")->required();
  fuzz_cmd->add_option("--max-users", options.bounds.max_users)->check(CLI::Range(2, 8));
  fuzz_cmd->add_option("--max-channels", options.bounds.max_channels)->check(CLI::Range(1, 4));
  fuzz_cmd->add_option("--max-actions", options.bounds.max_actions)->check(CLI::Range(5, 200));
  fuzz_cmd->add_option("--out-dir", failure_dir, "Directory for the minimal failing scenario");
  fuzz_cmd->add_option("--inject", faults, "Fault to inject: private-proximity, ack-broadcast, room-state-channel")
      ->check(CLI::IsMember({"private-proximity", "ack-broadcast", "room-state-channel"}));

  std::string state_path;
  std::string speaker;
  auto* oracle = app.add_subcommand("oracle", "Brute-force recipient set for one speaker");
  oracle->add_option("state", state_path, "Room state JSON file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--speaker", speaker, "Speaker name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return run_command(scenario_path, live, out_path);
    }
    if (*fuzz_cmd) {
      for (const auto& f : faults) {
        options.faults.private_speech_proximity_gated |= f == "private-proximity";
        options.faults.broadcast_channel_ack |= f == "ack-broadcast";
        options.faults.channel_in_room_state |= f == "room-state-channel";
      }
      if (!failure_dir.empty()) {
        options.failure_dir = failure_dir;
      }
      return fuzz_command(options);
    }
    return oracle_command(state_path, speaker);
  } catch (const std::exception& e) {
    std::cerr << "hushsim: " << e.what() << '\n';
    return 2;
  }
}
