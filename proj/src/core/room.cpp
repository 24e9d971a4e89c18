#include "hush/core/room.hpp"

#include <cmath>
#include <stdexcept>

namespace hush::core {

bool Position::finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }

double distance(const Position& a, const Position& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

std::optional<std::string> RoomConfig::validate() const {
  if (num_channels < 1) {
    return "num_channels must be at least 1";
  }
  if (max_users < 2) {
    return "max_users must be at least 2";
  }
  if (!std::isfinite(hearing_radius) || hearing_radius <= 0.0) {
    return "hearing_radius must be a positive finite number";
  }
  if (!spawn.finite()) {
    return "spawn position must be finite";
  }
  return std::nullopt;
}

std::string_view to_string(CoreError error) noexcept {
  switch (error) {
  case CoreError::kRoomFull:
    return "room is full";
  case CoreError::kInvalidChannel:
    return "channel out of range";
  case CoreError::kUnknownUser:
    return "unknown user";
  case CoreError::kNotInChannel:
    return "not in a channel";
  case CoreError::kNonFiniteCoordinate:
    return "coordinate is not finite";
  }
  return "unknown error";
}

std::string_view to_string(EffectKind kind) noexcept {
  switch (kind) {
  case EffectKind::kJoin:
    return "join";
  case EffectKind::kLeave:
    return "leave";
  case EffectKind::kSwitch:
    return "switch";
  }
  return "join";
}

Room::Room(RoomConfig config, Faults faults) : config_(config), faults_(faults) {
  if (auto reason = config_.validate()) {
    throw std::invalid_argument("invalid room config: " + *reason);
  }
}

const UserRecord* Room::find(const UserId& id) const {
  auto it = users_.find(id);
  return it == users_.end() ? nullptr : &it->second;
}

Result<UserId, CoreError> Room::add_user(std::string display_name) {
  if (users_.size() >= static_cast<std::size_t>(config_.max_users)) {
    return CoreError::kRoomFull;
  }
  UserId id{"u" + std::to_string(next_id_++)};
  users_.emplace(id, UserRecord{id, std::move(display_name), config_.spawn, VoiceState::public_space()});
  return id;
}

Result<UserRecord, CoreError> Room::remove_user(const UserId& id) {
  auto it = users_.find(id);
  if (it == users_.end()) {
    return CoreError::kUnknownUser;
  }
  UserRecord record = std::move(it->second);
  users_.erase(it);
  return record;
}

Result<EffectEvent, CoreError> Room::enter_channel(const UserId& user, ChannelId channel) {
  auto it = users_.find(user);
  if (it == users_.end()) {
    return CoreError::kUnknownUser;
  }
  if (channel.index < 1 || channel.index > config_.num_channels) {
    return CoreError::kInvalidChannel;
  }
  VoiceState& state = it->second.voice_state;
  EffectKind kind = EffectKind::kJoin;
  if (state.is_private() && state.channel() != channel) {
    kind = EffectKind::kSwitch;
  }
  state = VoiceState::in_channel(channel);
  return EffectEvent{user, kind, channel};
}

Result<EffectEvent, CoreError> Room::exit_channel(const UserId& user) {
  auto it = users_.find(user);
  if (it == users_.end()) {
    return CoreError::kUnknownUser;
  }
  if (it->second.voice_state.is_public()) {
    return CoreError::kNotInChannel;
  }
  it->second.voice_state = VoiceState::public_space();
  return EffectEvent{user, EffectKind::kLeave, std::nullopt};
}

Result<Position, CoreError> Room::move(const UserId& user, Position to) {
  auto it = users_.find(user);
  if (it == users_.end()) {
    return CoreError::kUnknownUser;
  }
  if (!to.finite()) {
    return CoreError::kNonFiniteCoordinate;
  }
  it->second.position = to;
  return to;
}

bool Room::hears_public(const UserRecord& speaker, const UserRecord& listener) const {
  return distance(speaker.position, listener.position) <= config_.hearing_radius;
}

Result<std::set<UserId>, CoreError> Room::compute_recipients(const UserId& speaker) const {
  const UserRecord* source = find(speaker);
  if (source == nullptr) {
    return CoreError::kUnknownUser;
  }
  std::set<UserId> recipients;
  const auto channel = source->voice_state.channel();
  for (const auto& [id, listener] : users_) {
    if (id == speaker) {
      continue;
    }
    if (channel) {
      // Channel speech reaches members at any distance.
      if (listener.voice_state.channel() != channel) {
        continue;
      }
      if (faults_.private_speech_proximity_gated && !hears_public(*source, listener)) {
        continue;
      }
      recipients.insert(id);
    } else if (hears_public(*source, listener)) {
      // Public speech ignores the listener's channel.
      recipients.insert(id);
    }
  }
  return recipients;
}

Result<RoomView, CoreError> Room::observable_view(const UserId& observer) const {
  const UserRecord* self = find(observer);
  if (self == nullptr) {
    return CoreError::kUnknownUser;
  }
  RoomView view{observer, self->voice_state, {}};
  view.users.reserve(users_.size());
  for (const auto& [id, record] : users_) {
    view.users.push_back(PeerView{id, record.display_name, record.position});
  }
  return view;
}

std::optional<std::string> Room::check_invariants() const {
  if (users_.size() > static_cast<std::size_t>(config_.max_users)) {
    return "room holds more users than max_users";
  }
  for (const auto& [id, record] : users_) {
    if (record.id != id || !id.valid()) {
      return "user record keyed under a mismatched or invalid id";
    }
    if (!record.position.finite()) {
      return "user " + id.str() + " has a non-finite position";
    }
    if (auto channel = record.voice_state.channel()) {
      if (channel->index < 1 || channel->index > config_.num_channels) {
        return "user " + id.str() + " is in an out-of-range channel";
      }
    }
  }
  return std::nullopt;
}

}  // namespace hush::core
