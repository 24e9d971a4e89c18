#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hush::core {

/// Server-assigned user identifier, unique within a room.
class UserId {
 public:
  static constexpr std::size_t kMaxLength = 64;

  UserId() = default;
  explicit UserId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool valid() const noexcept { return !value_.empty() && value_.size() <= kMaxLength; }

  friend auto operator<=>(const UserId&, const UserId&) = default;
  friend bool operator==(const UserId&, const UserId&) = default;

 private:
  std::string value_;
};

/// 1-based private channel number.
struct ChannelId {
  int index = 1;

  friend auto operator<=>(const ChannelId&, const ChannelId&) = default;
};

/// Routing discriminator: either the public space or exactly one private channel.
class VoiceState {
 public:
  VoiceState() = default;

  static VoiceState public_space() { return VoiceState{}; }
  static VoiceState in_channel(ChannelId channel) { return VoiceState{channel}; }

  bool is_public() const noexcept { return !channel_.has_value(); }
  bool is_private() const noexcept { return channel_.has_value(); }
  std::optional<ChannelId> channel() const noexcept { return channel_; }

  friend bool operator==(const VoiceState&, const VoiceState&) = default;

 private:
  explicit VoiceState(ChannelId channel) : channel_(channel) {}

  std::optional<ChannelId> channel_;
};

/// Planar position in meters.
struct Position {
  double x = 0.0;
  double y = 0.0;

  bool finite() const noexcept;
  friend bool operator==(const Position&, const Position&) = default;
};

double distance(const Position& a, const Position& b) noexcept;

struct UserRecord {
  UserId id;
  std::string display_name;
  Position position;
  VoiceState voice_state;

  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

struct RoomConfig {
  int num_channels = 7;
  int max_users = 10;
  double hearing_radius = 25.0;
  Position spawn{};

  /// Empty when the config satisfies its invariants, otherwise a reason.
  std::optional<std::string> validate() const;

  friend bool operator==(const RoomConfig&, const RoomConfig&) = default;
};

/// One opaque speech payload. Never carries the speaker's voice state.
struct AudioFrame {
  UserId speaker;
  std::int64_t seq = 0;
  std::string payload;
};

enum class EffectKind { kJoin, kLeave, kSwitch };

/// Local feedback for a channel transition. Addressed to the actor only.
struct EffectEvent {
  UserId actor;
  EffectKind kind = EffectKind::kJoin;
  std::optional<ChannelId> channel;

  friend bool operator==(const EffectEvent&, const EffectEvent&) = default;
};

enum class CoreError {
  kRoomFull,
  kInvalidChannel,
  kUnknownUser,
  kNotInChannel,
  kNonFiniteCoordinate,
};

std::string_view to_string(CoreError error) noexcept;
std::string_view to_string(EffectKind kind) noexcept;

}  // namespace hush::core
