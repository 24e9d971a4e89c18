#include "hush/relay/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace hush::relay {

namespace {

std::string where(const YAML::Node& node, std::string_view field) {
  const auto mark = node.Mark();
  std::ostringstream out;
  if (mark.line >= 0) {
    out << "line " << (mark.line + 1) << ": ";
  }
  out << "field '" << field << "'";
  return out.str();
}

[[noreturn]] void fail(const YAML::Node& node, std::string_view field, std::string_view problem) {
  throw ConfigInvalid(where(node, field) + " " + std::string(problem));
}

void reject_unknown_keys(const YAML::Node& map, const std::set<std::string>& allowed, std::string_view scope) {
  for (const auto& entry : map) {
    const auto key = entry.first.as<std::string>();
    if (!allowed.contains(key)) {
      fail(entry.first, std::string(scope) + key, "is not a recognized setting");
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, std::string_view field) {
  if (!node.IsScalar()) {
    fail(node, field, "must be a scalar");
  }
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, field, "has the wrong type");
  }
}

RoomSpec parse_room(const YAML::Node& node, std::size_t index) {
  const std::string scope = "rooms[" + std::to_string(index) + "].";
  if (!node.IsMap()) {
    fail(node, scope, "must be a mapping");
  }
  reject_unknown_keys(node, {"room_id", "num_channels", "max_users", "hearing_radius", "spawn_x", "spawn_y"},
                      scope);
  RoomSpec spec;
  if (!node["room_id"]) {
    fail(node, scope + "room_id", "is required");
  }
  spec.room_id = scalar<std::string>(node["room_id"], scope + "room_id");
  if (spec.room_id.empty() || spec.room_id.size() > 64) {
    fail(node["room_id"], scope + "room_id", "must be 1-64 characters");
  }
  if (auto n = node["num_channels"]) {
    spec.config.num_channels = scalar<int>(n, scope + "num_channels");
    if (spec.config.num_channels < 1) {
      fail(n, scope + "num_channels", "must be at least 1");
    }
  }
  if (auto n = node["max_users"]) {
    spec.config.max_users = scalar<int>(n, scope + "max_users");
    if (spec.config.max_users < 2) {
      fail(n, scope + "max_users", "must be at least 2");
    }
  }
  if (auto n = node["hearing_radius"]) {
    spec.config.hearing_radius = scalar<double>(n, scope + "hearing_radius");
  }
  if (auto n = node["spawn_x"]) {
    spec.config.spawn.x = scalar<double>(n, scope + "spawn_x");
  }
  if (auto n = node["spawn_y"]) {
    spec.config.spawn.y = scalar<double>(n, scope + "spawn_y");
  }
  if (auto reason = spec.config.validate()) {
    fail(node, scope, *reason);
  }
  return spec;
}

}  // namespace

std::optional<ListenAddress> parse_listen_address(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    return std::nullopt;
  }
  unsigned port = 0;
  const auto digits = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || port > 65535) {
    return std::nullopt;
  }
  return ListenAddress{std::string(text.substr(0, colon)), static_cast<unsigned short>(port)};
}

ServerConfig parse_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw ConfigInvalid("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  ServerConfig config;
  if (root.IsNull()) {
    return config;
  }
  if (!root.IsMap()) {
    throw ConfigInvalid("config must be a mapping of settings");
  }
  reject_unknown_keys(root, {"listen", "log_level", "rooms"}, "");
  if (auto n = root["listen"]) {
    config.listen = scalar<std::string>(n, "listen");
    if (!parse_listen_address(config.listen)) {
      fail(n, "listen", "must look like host:port");
    }
  }
  if (auto n = root["log_level"]) {
    auto level = parse_log_level(scalar<std::string>(n, "log_level"));
    if (!level) {
      fail(n, "log_level", "must be one of debug, info, warn, error, off");
    }
    config.log_level = *level;
  }
  if (auto n = root["rooms"]) {
    if (!n.IsSequence() || n.size() == 0) {
      fail(n, "rooms", "must be a non-empty list");
    }
    config.rooms.clear();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < n.size(); ++i) {
      auto spec = parse_room(n[i], i);
      if (!seen.insert(spec.room_id).second) {
        fail(n[i]["room_id"], "rooms[" + std::to_string(i) + "].room_id", "duplicates another room");
      }
      config.rooms.push_back(std::move(spec));
    }
  }
  return config;
}

ServerConfig load_config(const std::optional<std::filesystem::path>& path) {
  if (!path) {
    return ServerConfig{};
  }
  std::ifstream in(*path);
  if (!in) {
    throw ConfigInvalid("cannot read config file " + path->string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigInvalid& e) {
    throw ConfigInvalid(path->string() + ": " + e.what());
  }
}

}  // namespace hush::relay
