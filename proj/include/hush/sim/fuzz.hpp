#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hush/core/room.hpp"
#include "hush/sim/scenario.hpp"
#include "hush/sim/shadow.hpp"
#include "hush/sim/transcript.hpp"

namespace hush::sim {

struct FuzzBounds {
  int max_users = 8;
  int max_channels = 4;
  int max_actions = 40;
};

struct CheckFailure {
  std::string check;  // "routing", "leak", "state", "independence", "invariant"
  std::string detail;
};

struct ScenarioVerdict {
  std::vector<CheckFailure> failures;
  std::size_t steps_checked = 0;
  std::size_t speaks_checked = 0;
  std::size_t records_scanned = 0;

  bool passed() const noexcept { return failures.empty(); }
};

/// AUDIO recipients of every SPEAK must equal the oracle's answer for the
/// room as the harness believes it to be just before that step.
std::vector<CheckFailure> check_routing(const Scenario& scenario, const Transcript& transcript,
                                        const ShadowTimeline& timeline, std::size_t* speaks_checked = nullptr);

/// Runs the scenario in-process against a relay built with `faults` and
/// applies every check: routing vs oracle, leak scan, room invariants and
/// shadow/server agreement after every step, and independence of each
/// actor's non-audio deliveries from other actors' channel activity.
ScenarioVerdict check_scenario(const Scenario& scenario, const core::Faults& faults = {});

/// Random interleaving of every action kind within the bounds.
Scenario generate_scenario(std::uint64_t seed, const FuzzBounds& bounds);

/// Deletes actions (then unused actors) while `still_fails` holds.
Scenario shrink(const Scenario& failing, const std::function<bool(const Scenario&)>& still_fails);

struct FuzzOptions {
  std::uint64_t seed = 1;
  std::size_t count = 1000;
  FuzzBounds bounds;
  core::Faults faults;
  /// Where the minimal failing scenario is written, if set.
  std::optional<std::filesystem::path> failure_dir;
  bool stop_on_failure = true;
};

struct FuzzFailure {
  std::size_t index = 0;
  Scenario original;
  Scenario minimal;
  std::vector<CheckFailure> failures;
  std::optional<std::filesystem::path> written;
};

struct FuzzSummary {
  std::size_t run = 0;
  std::size_t passed = 0;
  std::size_t speaks_checked = 0;
  std::size_t records_scanned = 0;
  std::vector<FuzzFailure> failures;

  bool ok() const noexcept { return failures.empty(); }
};

FuzzSummary fuzz(const FuzzOptions& options);

}  // namespace hush::sim
