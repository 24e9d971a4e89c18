#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hush/core/result.hpp"
#include "hush/core/types.hpp"

namespace hush::core {

/// Deliberate defects that the verification harness must be able to detect.
/// Production configurations never enable any of these.
struct Faults {
  bool private_speech_proximity_gated = false;
  bool broadcast_channel_ack = false;
  bool channel_in_room_state = false;

  bool any() const noexcept {
    return private_speech_proximity_gated || broadcast_channel_ack || channel_in_room_state;
  }
};

struct PeerView {
  UserId id;
  std::string display_name;
  Position position;

  friend bool operator==(const PeerView&, const PeerView&) = default;
};

/// What one user is allowed to know about the room: everyone's identity and
/// position, but only their own voice state.
struct RoomView {
  UserId observer;
  VoiceState own_voice_state;
  std::vector<PeerView> users;

  friend bool operator==(const RoomView&, const RoomView&) = default;
};

/// Authoritative state of one world instance.
///
/// Mutations leave the room untouched when they fail. The type is a plain
/// value: copy it to snapshot, move it between threads, but mutate it from
/// one thread at a time.
class Room {
 public:
  explicit Room(RoomConfig config = {}, Faults faults = {});

  const RoomConfig& config() const noexcept { return config_; }
  const std::map<UserId, UserRecord>& users() const noexcept { return users_; }
  std::size_t size() const noexcept { return users_.size(); }
  const UserRecord* find(const UserId& id) const;

  Result<UserId, CoreError> add_user(std::string display_name);
  Result<UserRecord, CoreError> remove_user(const UserId& id);

  Result<EffectEvent, CoreError> enter_channel(const UserId& user, ChannelId channel);
  Result<EffectEvent, CoreError> exit_channel(const UserId& user);
  Result<Position, CoreError> move(const UserId& user, Position to);

  /// Users that hear one frame spoken by `speaker`. Never contains the speaker.
  Result<std::set<UserId>, CoreError> compute_recipients(const UserId& speaker) const;

  Result<RoomView, CoreError> observable_view(const UserId& observer) const;

  /// Empty when every room invariant holds, otherwise the first violation.
  std::optional<std::string> check_invariants() const;

  friend bool operator==(const Room& a, const Room& b) {
    return a.config_ == b.config_ && a.users_ == b.users_ && a.next_id_ == b.next_id_;
  }

 private:
  bool hears_public(const UserRecord& speaker, const UserRecord& listener) const;

  RoomConfig config_;
  Faults faults_;
  std::map<UserId, UserRecord> users_;
  std::uint64_t next_id_ = 1;
};

}  // namespace hush::core
