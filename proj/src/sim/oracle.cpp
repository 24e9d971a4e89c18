#include "hush/sim/oracle.hpp"

#include <stdexcept>

namespace hush::sim {

namespace {

const OracleUser* lookup(const OracleState& state, std::string_view name) {
  for (const auto& u : state.users) {
    if (u.name == name) {
      return &u;
    }
  }
  return nullptr;
}

bool within_radius(const OracleUser& a, const OracleUser& b, double radius) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy <= radius * radius;
}

// Rule 1: someone in a channel is heard by exactly the other members of it.
// Rule 2: someone in public is heard by everyone within the radius, members
// of any channel included.
bool audible(const OracleUser& speaker, const OracleUser& listener, double radius) {
  if (speaker.name == listener.name) {
    return false;
  }
  if (speaker.channel.has_value()) {
    return listener.channel.has_value() && *listener.channel == *speaker.channel;
  }
  return within_radius(speaker, listener, radius);
}

}  // namespace

std::set<std::string> oracle_recipients(const OracleState& state, std::string_view speaker) {
  std::set<std::string> heard_by;
  const OracleUser* source = lookup(state, speaker);
  if (source == nullptr) {
    return heard_by;
  }
  for (const auto& listener : state.users) {
    if (audible(*source, listener, state.hearing_radius)) {
      heard_by.insert(listener.name);
    }
  }
  return heard_by;
}

OracleState oracle_state_from_json(const nlohmann::json& j) {
  OracleState state;
  if (!j.is_object()) {
    throw std::invalid_argument("oracle state must be a JSON object");
  }
  if (j.contains("hearing_radius")) {
    state.hearing_radius = j.at("hearing_radius").get<double>();
  } else if (j.contains("config") && j["config"].contains("hearing_radius")) {
    state.hearing_radius = j["config"]["hearing_radius"].get<double>();
  }
  for (const auto& u : j.at("users")) {
    OracleUser user;
    user.name = u.at("name").get<std::string>();
    user.x = u.value("x", 0.0);
    user.y = u.value("y", 0.0);
    if (u.contains("channel") && !u["channel"].is_null()) {
      user.channel = u["channel"].get<long long>();
    }
    for (const auto& other : state.users) {
      if (other.name == user.name) {
        throw std::invalid_argument("duplicate user '" + user.name + "'");
      }
    }
    state.users.push_back(std::move(user));
  }
  return state;
}

}  // namespace hush::sim
