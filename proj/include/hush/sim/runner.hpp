#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

#include "hush/core/room.hpp"
#include "hush/relay/relay.hpp"
#include "hush/sim/scenario.hpp"
#include "hush/sim/transcript.hpp"

namespace hush::sim {

/// Relay state after one step, with each actor's current session (by actor index).
struct StepView {
  std::size_t step = 0;
  const relay::Relay& relay;
  std::span<const std::optional<relay::SessionId>> sessions;
};

struct InProcess {
  core::Faults faults;
  /// Called after every scenario step, including the final time flush.
  std::function<void(const StepView&)> after_step;
  /// Actions for which this returns true are not sent; time still advances.
  std::function<bool(const ScriptAction&)> skip;
};

struct Live {
  std::string host = "127.0.0.1";
  unsigned short port = 0;
  std::chrono::milliseconds timeout{5000};
  /// Sleep until each action's scenario time before sending it.
  bool pace = true;
};

using RunMode = std::variant<InProcess, Live>;

class ConnectionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Executes the scenario and records every frame delivered to every actor.
///
/// After each action the runner waits until all resulting deliveries have
/// arrived, so records are grouped by step. Within a step, records are
/// ordered by actor declaration order, then arrival order.
Transcript run_scenario(const Scenario& scenario, const RunMode& mode = InProcess{});

}  // namespace hush::sim
