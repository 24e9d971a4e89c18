#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hush/sim/oracle.hpp"
#include "hush/sim/scenario.hpp"
#include "hush/sim/transcript.hpp"

namespace hush::sim {

/// What the harness believes about one actor, rebuilt from the script and
/// the server's replies (never from server internals).
struct ShadowUser {
  bool connected = false;
  bool in_room = false;
  std::string user_id;
  double x = 0.0;
  double y = 0.0;
  std::optional<std::int64_t> channel;

  friend bool operator==(const ShadowUser&, const ShadowUser&) = default;
};

using ShadowState = std::map<std::string, ShadowUser>;

/// after_step[k] is the believed state once step k (and its deliveries)
/// completed. The state before step 0 is empty.
struct ShadowTimeline {
  std::vector<ShadowState> after_step;

  const ShadowState& before(std::size_t step) const;
};

ShadowTimeline replay_shadow(const Scenario& scenario, const Transcript& transcript);

OracleState to_oracle_state(const Scenario& scenario, const ShadowState& state);

/// One channel transition of one actor; channel absent means public space.
struct ChannelAssignment {
  std::size_t step = 0;
  std::string actor;
  std::optional<std::int64_t> channel;

  friend bool operator==(const ChannelAssignment&, const ChannelAssignment&) = default;
};

using ChannelHistory = std::vector<ChannelAssignment>;

/// Channel transitions implied by consecutive shadow states.
ChannelHistory channel_history(const ShadowTimeline& timeline);

/// Channel of `actor` in effect after `step`, per the history.
std::optional<std::int64_t> channel_at(const ChannelHistory& history, const std::string& actor, std::size_t step);

}  // namespace hush::sim
