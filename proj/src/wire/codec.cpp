#include "hush/wire/codec.hpp"

#include <array>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <utility>

namespace hush::wire {

using nlohmann::ordered_json;

namespace {

constexpr std::size_t kMaxFrameBytes = 256 * 1024;
constexpr int kMaxNesting = 8;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Thrown inside the decoder only; converted to DecodeError at the boundary.
struct SchemaViolation {
  std::string reason;
};

[[noreturn]] void reject(std::string reason) { throw SchemaViolation{std::move(reason)}; }

// Cheap structural pre-check so pathological nesting never reaches the parser.
bool nesting_within_limit(std::string_view text) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (char c : text) {
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      if (++depth > kMaxNesting) {
        return false;
      }
    } else if (c == '}' || c == ']') {
      --depth;
    }
  }
  return true;
}

void require_exact_fields(const ordered_json& obj, std::initializer_list<std::string_view> fields,
                          std::string_view where) {
  if (!obj.is_object()) {
    reject(std::string(where) + " must be an object");
  }
  for (auto field : fields) {
    if (!obj.contains(std::string(field))) {
      reject(std::string(where) + " is missing field '" + std::string(field) + "'");
    }
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto field : fields) {
      known = known || key == field;
    }
    if (!known) {
      reject(std::string(where) + " has unknown field '" + key + "'");
    }
  }
}

std::int64_t get_int(const ordered_json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (v.is_number_integer() && !v.is_number_unsigned()) {
    return v.get<std::int64_t>();
  }
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      reject(std::string("field '") + key + "' is out of integer range");
    }
    return static_cast<std::int64_t>(u);
  }
  reject(std::string("field '") + key + "' must be an integer");
}

double get_number(const ordered_json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) {
    reject(std::string("field '") + key + "' must be a number");
  }
  double d = v.get<double>();
  if (!std::isfinite(d)) {
    reject(std::string("field '") + key + "' must be finite");
  }
  return d;
}

std::string get_string(const ordered_json& obj, const char* key, std::size_t max_len = kMaxNameLength) {
  const auto& v = obj.at(key);
  if (!v.is_string()) {
    reject(std::string("field '") + key + "' must be a string");
  }
  auto s = v.get<std::string>();
  if (s.empty() || s.size() > max_len) {
    reject(std::string("field '") + key + "' must be 1-" + std::to_string(max_len) + " bytes");
  }
  return s;
}

std::string get_message(const ordered_json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) {
    reject(std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::string get_payload(const ordered_json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) {
    reject(std::string("field '") + key + "' must be a base-64 string");
  }
  auto bytes = base64_decode(v.get_ref<const std::string&>());
  if (!bytes) {
    reject(std::string("field '") + key + "' is not valid base-64");
  }
  if (bytes->size() > kMaxPayloadBytes) {
    reject(std::string("field '") + key + "' exceeds 64 KiB");
  }
  return std::move(*bytes);
}

std::string dump(const ordered_json& j) {
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

ordered_json parse_frame(std::string_view frame) {
  if (frame.size() > kMaxFrameBytes) {
    reject("frame exceeds size limit");
  }
  if (!nesting_within_limit(frame)) {
    reject("frame nesting too deep");
  }
  ordered_json j;
  try {
    j = ordered_json::parse(frame.begin(), frame.end());
  } catch (const ordered_json::exception& e) {
    reject(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) {
    reject("frame must be a JSON object");
  }
  auto it = j.find("type");
  if (it == j.end() || !it->is_string()) {
    reject("frame lacks a string 'type' field");
  }
  return j;
}

ClientMessage client_from_json(const ordered_json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "HELLO") {
    require_exact_fields(j, {"type", "proto_version", "display_name"}, type);
    return Hello{get_int(j, "proto_version"), get_string(j, "display_name")};
  }
  if (type == "JOIN_ROOM") {
    require_exact_fields(j, {"type", "room_id"}, type);
    return JoinRoom{get_string(j, "room_id")};
  }
  if (type == "MOVE") {
    require_exact_fields(j, {"type", "x", "y"}, type);
    return Move{get_number(j, "x"), get_number(j, "y")};
  }
  if (type == "SPEAK") {
    require_exact_fields(j, {"type", "seq", "payload"}, type);
    return Speak{get_int(j, "seq"), get_payload(j, "payload")};
  }
  if (type == "ENTER_CHANNEL") {
    require_exact_fields(j, {"type", "channel"}, type);
    return EnterChannel{get_int(j, "channel")};
  }
  if (type == "EXIT_CHANNEL") {
    require_exact_fields(j, {"type"}, type);
    return ExitChannel{};
  }
  if (type == "PING") {
    require_exact_fields(j, {"type", "nonce"}, type);
    return Ping{get_int(j, "nonce")};
  }
  reject("unknown client message type '" + type + "'");
}

RoomConfigInfo room_config_from_json(const ordered_json& j) {
  require_exact_fields(j, {"num_channels", "max_users", "hearing_radius"}, "room_config");
  return RoomConfigInfo{get_int(j, "num_channels"), get_int(j, "max_users"),
                        get_number(j, "hearing_radius")};
}

ServerMessage server_from_json(const ordered_json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "WELCOME") {
    require_exact_fields(j, {"type", "user_id", "room_config"}, type);
    Welcome w;
    if (!j.at("user_id").is_null()) {
      w.user_id = get_string(j, "user_id");
    }
    if (!j.at("room_config").is_null()) {
      w.room_config = room_config_from_json(j.at("room_config"));
    }
    return w;
  }
  if (type == "ROOM_STATE") {
    require_exact_fields(j, {"type", "users"}, type);
    const auto& users = j.at("users");
    if (!users.is_array()) {
      reject("field 'users' must be an array");
    }
    RoomState rs;
    for (const auto& entry : users) {
      require_exact_fields(entry, {"user_id", "display_name", "x", "y"}, "ROOM_STATE.users[]");
      rs.users.push_back(RosterEntry{get_string(entry, "user_id"), get_string(entry, "display_name"),
                                     get_number(entry, "x"), get_number(entry, "y")});
    }
    return rs;
  }
  if (type == "USER_JOINED") {
    require_exact_fields(j, {"type", "user_id", "display_name", "x", "y"}, type);
    return UserJoined{get_string(j, "user_id"), get_string(j, "display_name"), get_number(j, "x"),
                      get_number(j, "y")};
  }
  if (type == "USER_LEFT") {
    require_exact_fields(j, {"type", "user_id"}, type);
    return UserLeft{get_string(j, "user_id")};
  }
  if (type == "USER_MOVED") {
    require_exact_fields(j, {"type", "user_id", "x", "y"}, type);
    return UserMoved{get_string(j, "user_id"), get_number(j, "x"), get_number(j, "y")};
  }
  if (type == "AUDIO") {
    require_exact_fields(j, {"type", "speaker_id", "seq", "payload"}, type);
    return Audio{get_string(j, "speaker_id"), get_int(j, "seq"), get_payload(j, "payload")};
  }
  if (type == "CHANNEL_ACK") {
    require_exact_fields(j, {"type", "channel", "effect"}, type);
    ChannelAck ack;
    if (!j.at("channel").is_null()) {
      ack.channel = get_int(j, "channel");
    }
    const auto& effect = j.at("effect");
    if (!effect.is_string()) {
      reject("field 'effect' must be a string");
    }
    auto parsed = ack_effect_from_string(effect.get<std::string>());
    if (!parsed) {
      reject("field 'effect' must be join, leave or switch");
    }
    ack.effect = *parsed;
    return ack;
  }
  if (type == "ERROR") {
    require_exact_fields(j, {"type", "code", "message"}, type);
    const auto& code = j.at("code");
    if (!code.is_string()) {
      reject("field 'code' must be a string");
    }
    auto parsed = error_code_from_string(code.get<std::string>());
    if (!parsed) {
      reject("unknown error code");
    }
    return Error{*parsed, get_message(j, "message")};
  }
  if (type == "PONG") {
    require_exact_fields(j, {"type", "nonce"}, type);
    return Pong{get_int(j, "nonce")};
  }
  reject("unknown server message type '" + type + "'");
}

template <typename Message, typename Convert>
Result<Message, DecodeError> decode_with(std::string_view frame, Convert convert) {
  try {
    return convert(parse_frame(frame));
  } catch (const SchemaViolation& v) {
    return DecodeError{v.reason};
  } catch (const std::exception& e) {
    return DecodeError{std::string("malformed frame: ") + e.what()};
  }
}

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::kInvalidChannel:
    return "INVALID_CHANNEL";
  case ErrorCode::kNotInChannel:
    return "NOT_IN_CHANNEL";
  case ErrorCode::kRoomFull:
    return "ROOM_FULL";
  case ErrorCode::kUnknownRoom:
    return "UNKNOWN_ROOM";
  case ErrorCode::kBadMessage:
    return "BAD_MESSAGE";
  case ErrorCode::kProtocolVersion:
    return "PROTOCOL_VERSION";
  }
  return "BAD_MESSAGE";
}

std::optional<ErrorCode> error_code_from_string(std::string_view text) noexcept {
  for (auto code : {ErrorCode::kInvalidChannel, ErrorCode::kNotInChannel, ErrorCode::kRoomFull,
                    ErrorCode::kUnknownRoom, ErrorCode::kBadMessage, ErrorCode::kProtocolVersion}) {
    if (to_string(code) == text) {
      return code;
    }
  }
  return std::nullopt;
}

std::string_view to_string(AckEffect effect) noexcept {
  switch (effect) {
  case AckEffect::kJoin:
    return "join";
  case AckEffect::kLeave:
    return "leave";
  case AckEffect::kSwitch:
    return "switch";
  }
  return "join";
}

std::optional<AckEffect> ack_effect_from_string(std::string_view text) noexcept {
  for (auto effect : {AckEffect::kJoin, AckEffect::kLeave, AckEffect::kSwitch}) {
    if (to_string(effect) == text) {
      return effect;
    }
  }
  return std::nullopt;
}

std::string_view type_name(const ClientMessage& msg) noexcept {
  static constexpr std::array<std::string_view, 7> kNames = {
      "HELLO", "JOIN_ROOM", "MOVE", "SPEAK", "ENTER_CHANNEL", "EXIT_CHANNEL", "PING"};
  return kNames[msg.index()];
}

std::string_view type_name(const ServerMessage& msg) noexcept {
  return server_message_types()[msg.index()];
}

const std::vector<std::string_view>& server_message_types() {
  static const std::vector<std::string_view> kTypes = {
      "WELCOME", "ROOM_STATE", "USER_JOINED", "USER_LEFT", "USER_MOVED",
      "AUDIO",   "CHANNEL_ACK", "ERROR",      "PONG"};
  return kTypes;
}

const std::vector<std::string_view>& server_schema_fields(std::string_view type) {
  static const std::vector<std::pair<std::string_view, std::vector<std::string_view>>> kSchema = {
      {"WELCOME", {"type", "user_id", "room_config"}},
      {"WELCOME.room_config", {"num_channels", "max_users", "hearing_radius"}},
      {"ROOM_STATE", {"type", "users"}},
      {"ROOM_STATE.users", {"user_id", "display_name", "x", "y"}},
      {"USER_JOINED", {"type", "user_id", "display_name", "x", "y"}},
      {"USER_LEFT", {"type", "user_id"}},
      {"USER_MOVED", {"type", "user_id", "x", "y"}},
      {"AUDIO", {"type", "speaker_id", "seq", "payload"}},
      {"CHANNEL_ACK", {"type", "channel", "effect"}},
      {"ERROR", {"type", "code", "message"}},
      {"PONG", {"type", "nonce"}},
  };
  static const std::vector<std::string_view> kNone;
  for (const auto& [name, fields] : kSchema) {
    if (name == type) {
      return fields;
    }
  }
  return kNone;
}

ordered_json to_json(const ClientMessage& msg) {
  ordered_json j;
  j["type"] = std::string(type_name(msg));
  std::visit(Overloaded{
                 [&](const Hello& m) {
                   j["proto_version"] = m.proto_version;
                   j["display_name"] = m.display_name;
                 },
                 [&](const JoinRoom& m) { j["room_id"] = m.room_id; },
                 [&](const Move& m) {
                   j["x"] = m.x;
                   j["y"] = m.y;
                 },
                 [&](const Speak& m) {
                   j["seq"] = m.seq;
                   j["payload"] = base64_encode(m.payload);
                 },
                 [&](const EnterChannel& m) { j["channel"] = m.channel; },
                 [&](const ExitChannel&) {},
                 [&](const Ping& m) { j["nonce"] = m.nonce; },
             },
             msg);
  return j;
}

ordered_json to_json(const ServerMessage& msg) {
  ordered_json j;
  j["type"] = std::string(type_name(msg));
  std::visit(Overloaded{
                 [&](const Welcome& m) {
                   j["user_id"] = m.user_id ? ordered_json(*m.user_id) : ordered_json(nullptr);
                   if (m.room_config) {
                     ordered_json rc;
                     rc["num_channels"] = m.room_config->num_channels;
                     rc["max_users"] = m.room_config->max_users;
                     rc["hearing_radius"] = m.room_config->hearing_radius;
                     j["room_config"] = std::move(rc);
                   } else {
                     j["room_config"] = nullptr;
                   }
                 },
                 [&](const RoomState& m) {
                   ordered_json users = ordered_json::array();
                   for (const auto& u : m.users) {
                     ordered_json e;
                     e["user_id"] = u.user_id;
                     e["display_name"] = u.display_name;
                     e["x"] = u.x;
                     e["y"] = u.y;
                     users.push_back(std::move(e));
                   }
                   j["users"] = std::move(users);
                 },
                 [&](const UserJoined& m) {
                   j["user_id"] = m.user_id;
                   j["display_name"] = m.display_name;
                   j["x"] = m.x;
                   j["y"] = m.y;
                 },
                 [&](const UserLeft& m) { j["user_id"] = m.user_id; },
                 [&](const UserMoved& m) {
                   j["user_id"] = m.user_id;
                   j["x"] = m.x;
                   j["y"] = m.y;
                 },
                 [&](const Audio& m) {
                   j["speaker_id"] = m.speaker_id;
                   j["seq"] = m.seq;
                   j["payload"] = base64_encode(m.payload);
                 },
                 [&](const ChannelAck& m) {
                   j["channel"] = m.channel ? ordered_json(*m.channel) : ordered_json(nullptr);
                   j["effect"] = std::string(to_string(m.effect));
                 },
                 [&](const Error& m) {
                   j["code"] = std::string(to_string(m.code));
                   j["message"] = m.message;
                 },
                 [&](const Pong& m) { j["nonce"] = m.nonce; },
             },
             msg);
  return j;
}

std::string encode(const ClientMessage& msg) { return dump(to_json(msg)); }
std::string encode(const ServerMessage& msg) { return dump(to_json(msg)); }

Result<ClientMessage, DecodeError> decode_client(std::string_view frame) {
  return decode_with<ClientMessage>(frame, client_from_json);
}

Result<ServerMessage, DecodeError> decode_server(std::string_view frame) {
  return decode_with<ServerMessage>(frame, server_from_json);
}

}  // namespace hush::wire
