#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hush/core/types.hpp"

namespace hush::sim {

struct JoinRoomOp {
  friend bool operator==(const JoinRoomOp&, const JoinRoomOp&) = default;
};
struct MoveOp {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const MoveOp&, const MoveOp&) = default;
};
struct SpeakOp {
  std::string text;
  friend bool operator==(const SpeakOp&, const SpeakOp&) = default;
};
struct EnterOp {
  std::int64_t channel = 1;
  friend bool operator==(const EnterOp&, const EnterOp&) = default;
};
struct ExitOp {
  friend bool operator==(const ExitOp&, const ExitOp&) = default;
};
struct DisconnectOp {
  friend bool operator==(const DisconnectOp&, const DisconnectOp&) = default;
};

using Op = std::variant<JoinRoomOp, MoveOp, SpeakOp, EnterOp, ExitOp, DisconnectOp>;

std::string_view op_name(const Op& op) noexcept;

struct ScriptAction {
  std::int64_t t_ms = 0;
  std::string actor;
  Op op;
  friend bool operator==(const ScriptAction&, const ScriptAction&) = default;
};

/// Scripted session activity against one room. Each actor drives one client
/// session; actors connect lazily on their first action.
struct Scenario {
  std::uint64_t seed = 0;
  core::RoomConfig config;
  std::string room_id = "main";
  std::vector<std::string> actors;
  std::vector<ScriptAction> actions;

  std::size_t actor_index(std::string_view name) const;
};

class ScenarioInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ScenarioInvalid naming the first problem.
void validate(const Scenario& scenario);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const Scenario& scenario);

}  // namespace hush::sim
