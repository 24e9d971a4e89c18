#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hush::wire {

inline constexpr std::int64_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxPayloadBytes = 64 * 1024;
inline constexpr std::size_t kMaxNameLength = 64;

// Client -> server.

struct Hello {
  std::int64_t proto_version = kProtocolVersion;
  std::string display_name;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct JoinRoom {
  std::string room_id;
  friend bool operator==(const JoinRoom&, const JoinRoom&) = default;
};

struct Move {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Move&, const Move&) = default;
};

/// Payload bytes travel as base-64 text on the wire.
struct Speak {
  std::int64_t seq = 0;
  std::string payload;
  friend bool operator==(const Speak&, const Speak&) = default;
};

struct EnterChannel {
  std::int64_t channel = 0;
  friend bool operator==(const EnterChannel&, const EnterChannel&) = default;
};

struct ExitChannel {
  friend bool operator==(const ExitChannel&, const ExitChannel&) = default;
};

struct Ping {
  std::int64_t nonce = 0;
  friend bool operator==(const Ping&, const Ping&) = default;
};

using ClientMessage = std::variant<Hello, JoinRoom, Move, Speak, EnterChannel, ExitChannel, Ping>;

// Server -> client.

struct RoomConfigInfo {
  std::int64_t num_channels = 0;
  std::int64_t max_users = 0;
  double hearing_radius = 0.0;
  friend bool operator==(const RoomConfigInfo&, const RoomConfigInfo&) = default;
};

/// Sent to the acting session only. Both fields are null in the reply to
/// HELLO and populated in the reply to a successful JOIN_ROOM.
struct Welcome {
  std::optional<std::string> user_id;
  std::optional<RoomConfigInfo> room_config;
  friend bool operator==(const Welcome&, const Welcome&) = default;
};

struct RosterEntry {
  std::string user_id;
  std::string display_name;
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const RosterEntry&, const RosterEntry&) = default;
};

struct RoomState {
  std::vector<RosterEntry> users;
  friend bool operator==(const RoomState&, const RoomState&) = default;
};

struct UserJoined {
  std::string user_id;
  std::string display_name;
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const UserJoined&, const UserJoined&) = default;
};

struct UserLeft {
  std::string user_id;
  friend bool operator==(const UserLeft&, const UserLeft&) = default;
};

struct UserMoved {
  std::string user_id;
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const UserMoved&, const UserMoved&) = default;
};

struct Audio {
  std::string speaker_id;
  std::int64_t seq = 0;
  std::string payload;
  friend bool operator==(const Audio&, const Audio&) = default;
};

enum class AckEffect { kJoin, kLeave, kSwitch };

struct ChannelAck {
  std::optional<std::int64_t> channel;
  AckEffect effect = AckEffect::kJoin;
  friend bool operator==(const ChannelAck&, const ChannelAck&) = default;
};

enum class ErrorCode {
  kInvalidChannel,
  kNotInChannel,
  kRoomFull,
  kUnknownRoom,
  kBadMessage,
  kProtocolVersion,
};

struct Error {
  ErrorCode code = ErrorCode::kBadMessage;
  std::string message;
  friend bool operator==(const Error&, const Error&) = default;
};

struct Pong {
  std::int64_t nonce = 0;
  friend bool operator==(const Pong&, const Pong&) = default;
};

using ServerMessage = std::variant<Welcome, RoomState, UserJoined, UserLeft, UserMoved, Audio,
                                   ChannelAck, Error, Pong>;

std::string_view to_string(ErrorCode code) noexcept;
std::optional<ErrorCode> error_code_from_string(std::string_view text) noexcept;
std::string_view to_string(AckEffect effect) noexcept;
std::optional<AckEffect> ack_effect_from_string(std::string_view text) noexcept;

/// Wire "type" discriminator of a message.
std::string_view type_name(const ClientMessage& msg) noexcept;
std::string_view type_name(const ServerMessage& msg) noexcept;

/// Field names each server message type carries, in wire order. Nested
/// roster entries and room configs are listed under "ROOM_STATE.users" and
/// "WELCOME.room_config".
const std::vector<std::string_view>& server_schema_fields(std::string_view type);

/// All server message type names.
const std::vector<std::string_view>& server_message_types();

}  // namespace hush::wire
