#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hush/core/types.hpp"
#include "hush/relay/event_log.hpp"

namespace hush::relay {

struct RoomSpec {
  std::string room_id;
  core::RoomConfig config;
};

struct ServerConfig {
  std::string listen = "127.0.0.1:8765";
  std::vector<RoomSpec> rooms{{"main", core::RoomConfig{}}};
  LogLevel log_level = LogLevel::kInfo;
};

/// Raised for unreadable or invalid config files. what() names the line
/// and field at fault.
class ConfigInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the YAML config document. Missing keys take their defaults;
/// unknown keys are rejected.
ServerConfig parse_config(std::string_view yaml_text);

/// Defaults when no path is given; otherwise the file must exist and parse.
ServerConfig load_config(const std::optional<std::filesystem::path>& path);

struct ListenAddress {
  std::string host;
  unsigned short port = 0;
};

std::optional<ListenAddress> parse_listen_address(std::string_view text);

}  // namespace hush::relay
