#include "hush/sim/shadow.hpp"

namespace hush::sim {

namespace {

bool has_record(const std::vector<const DeliveryRecord*>& step_records, const std::string& actor,
                std::string_view kind, bool from_self) {
  for (const auto* r : step_records) {
    if (r->to == actor && r->kind == kind && (!from_self || r->from == actor)) {
      return true;
    }
  }
  return false;
}

}  // namespace

const ShadowState& ShadowTimeline::before(std::size_t step) const {
  static const ShadowState kEmpty;
  return step == 0 ? kEmpty : after_step.at(step - 1);
}

ShadowTimeline replay_shadow(const Scenario& scenario, const Transcript& transcript) {
  ShadowTimeline timeline;
  ShadowState state;
  for (const auto& actor : scenario.actors) {
    state[actor] = ShadowUser{};
  }
  std::size_t cursor = 0;
  for (std::size_t step = 0; step <= scenario.actions.size(); ++step) {
    std::vector<const DeliveryRecord*> records;
    while (cursor < transcript.records.size() && transcript.records[cursor].step == step) {
      records.push_back(&transcript.records[cursor++]);
    }
    if (step < scenario.actions.size()) {
      const auto& action = scenario.actions[step];
      auto& user = state[action.actor];
      if (std::holds_alternative<DisconnectOp>(action.op)) {
        user = ShadowUser{};
      } else {
        user.connected = true;
        if (std::holds_alternative<JoinRoomOp>(action.op)) {
          for (const auto* r : records) {
            if (r->to != action.actor || r->kind != "WELCOME") {
              continue;
            }
            auto j = nlohmann::json::parse(r->detail, nullptr, false);
            if (j.is_object() && j["user_id"].is_string() && !j["room_config"].is_null()) {
              user.in_room = true;
              user.user_id = j["user_id"].get<std::string>();
              user.x = scenario.config.spawn.x;
              user.y = scenario.config.spawn.y;
              user.channel.reset();
            }
          }
        } else if (const auto* move = std::get_if<MoveOp>(&action.op)) {
          // Accepted moves are echoed to the mover.
          if (has_record(records, action.actor, "USER_MOVED", true)) {
            user.x = move->x;
            user.y = move->y;
          }
        } else if (const auto* enter = std::get_if<EnterOp>(&action.op)) {
          if (has_record(records, action.actor, "CHANNEL_ACK", true)) {
            user.channel = enter->channel;
          }
        } else if (std::holds_alternative<ExitOp>(action.op)) {
          if (has_record(records, action.actor, "CHANNEL_ACK", true)) {
            user.channel.reset();
          }
        }
      }
    }
    for (const auto* r : records) {
      if (r->kind == "CLOSE") {
        state[r->to] = ShadowUser{};
      }
    }
    timeline.after_step.push_back(state);
  }
  return timeline;
}

OracleState to_oracle_state(const Scenario& scenario, const ShadowState& state) {
  OracleState oracle;
  oracle.hearing_radius = scenario.config.hearing_radius;
  for (const auto& [name, user] : state) {
    if (user.in_room) {
      oracle.users.push_back(OracleUser{name, user.x, user.y,
                                        user.channel ? std::optional<long long>(*user.channel) : std::nullopt});
    }
  }
  return oracle;
}

ChannelHistory channel_history(const ShadowTimeline& timeline) {
  ChannelHistory history;
  for (std::size_t step = 0; step < timeline.after_step.size(); ++step) {
    const auto& before = timeline.before(step);
    for (const auto& [name, user] : timeline.after_step[step]) {
      auto it = before.find(name);
      const std::optional<std::int64_t> previous =
          it == before.end() ? std::nullopt : it->second.channel;
      if (previous != user.channel) {
        history.push_back(ChannelAssignment{step, name, user.channel});
      }
    }
  }
  return history;
}

std::optional<std::int64_t> channel_at(const ChannelHistory& history, const std::string& actor, std::size_t step) {
  std::optional<std::int64_t> channel;
  for (const auto& a : history) {
    if (a.step > step) {
      break;
    }
    if (a.actor == actor) {
      channel = a.channel;
    }
  }
  return channel;
}

}  // namespace hush::sim
