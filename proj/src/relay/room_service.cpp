#include "hush/relay/room_service.hpp"

#include <chrono>
#include <limits>

namespace hush::relay {

namespace {

constexpr std::size_t kMaxRoutingSamples = 1 << 20;

wire::AckEffect to_ack(core::EffectKind kind) {
  switch (kind) {
  case core::EffectKind::kJoin:
    return wire::AckEffect::kJoin;
  case core::EffectKind::kLeave:
    return wire::AckEffect::kLeave;
  case core::EffectKind::kSwitch:
    return wire::AckEffect::kSwitch;
  }
  return wire::AckEffect::kJoin;
}

wire::Error core_error(core::CoreError error) {
  return make_error(to_wire(error), std::string(core::to_string(error)));
}

}  // namespace

wire::ErrorCode to_wire(core::CoreError error) noexcept {
  switch (error) {
  case core::CoreError::kRoomFull:
    return wire::ErrorCode::kRoomFull;
  case core::CoreError::kInvalidChannel:
    return wire::ErrorCode::kInvalidChannel;
  case core::CoreError::kNotInChannel:
    return wire::ErrorCode::kNotInChannel;
  case core::CoreError::kUnknownUser:
    return wire::ErrorCode::kUnknownRoom;
  case core::CoreError::kNonFiniteCoordinate:
    return wire::ErrorCode::kBadMessage;
  }
  return wire::ErrorCode::kBadMessage;
}

RoomService::RoomService(std::string room_id, core::RoomConfig config, core::Faults faults, EventLog* log)
    : id_(std::move(room_id)), room_(config, faults), faults_(faults), log_(log) {}

SessionId RoomService::session_of(const core::UserId& user) const {
  auto it = members_.find(user);
  return it == members_.end() ? 0 : it->second.session;
}

Dispatch RoomService::execute(SessionState& session, const wire::ClientMessage& msg, Millis now) {
  session.last_seen = now;
  if (std::holds_alternative<wire::JoinRoom>(msg)) {
    return join(session, now);
  }
  Dispatch out;
  if (session.room_id != id_ || !members_.contains(session.user)) {
    out.send(session.id, make_error(wire::ErrorCode::kUnknownRoom, "join a room first"));
    return out;
  }
  if (const auto* m = std::get_if<wire::Move>(&msg)) {
    return move(session, *m, now);
  }
  if (const auto* m = std::get_if<wire::Speak>(&msg)) {
    return speak(session, *m, now);
  }
  if (const auto* m = std::get_if<wire::EnterChannel>(&msg)) {
    return enter(session, *m, now);
  }
  if (std::holds_alternative<wire::ExitChannel>(msg)) {
    return exit(session, now);
  }
  if (const auto* m = std::get_if<wire::Ping>(&msg)) {
    out.send(session.id, wire::Pong{m->nonce});
    return out;
  }
  out.send(session.id, make_error(wire::ErrorCode::kBadMessage, "unexpected message"));
  return out;
}

Dispatch RoomService::join(SessionState& session, Millis now) {
  Dispatch out;
  if (session.in_room()) {
    out.send(session.id, make_error(wire::ErrorCode::kBadMessage, "already in a room"));
    return out;
  }
  auto added = room_.add_user(session.display_name);
  if (!added) {
    log(LogLevel::kInfo, now, "join", core::UserId{}, "ROOM_FULL");
    out.send(session.id, core_error(added.error()));
    return out;
  }
  const core::UserId id = *added;
  session.room_id = id_;
  session.user = id;
  members_[id].session = session.id;

  const auto& config = room_.config();
  out.send(session.id, wire::Welcome{id.str(), wire::RoomConfigInfo{config.num_channels, config.max_users,
                                                                    config.hearing_radius}});
  out.send_frame(session.id, room_state_frame());
  const auto* record = room_.find(id);
  broadcast(out,
            wire::UserJoined{id.str(), record->display_name, record->position.x, record->position.y},
            &id);
  log(LogLevel::kInfo, now, "join", id, "ok");
  return out;
}

Dispatch RoomService::leave(SessionState& session, Millis now) {
  Dispatch out;
  if (session.room_id != id_ || !members_.contains(session.user)) {
    return out;
  }
  const core::UserId id = session.user;
  // Any channel membership dissolves with the user; nothing reports it.
  (void)room_.remove_user(id);
  members_.erase(id);
  session.room_id.clear();
  session.user = core::UserId{};
  broadcast(out, wire::UserLeft{id.str()});
  log(LogLevel::kInfo, now, "leave", id, "ok");
  return out;
}

Dispatch RoomService::move(SessionState& session, const wire::Move& msg, Millis now) {
  Dispatch out;
  const core::UserId& id = session.user;
  auto moved = room_.move(id, core::Position{msg.x, msg.y});
  if (!moved) {
    out.send(session.id, core_error(moved.error()));
    log(LogLevel::kInfo, now, "move", id, wire::to_string(to_wire(moved.error())));
    return out;
  }
  out.send(session.id, wire::UserMoved{id.str(), msg.x, msg.y});
  auto& member = members_.at(id);
  if (!member.last_move_broadcast || now - *member.last_move_broadcast >= kMoveBroadcastInterval) {
    member.last_move_broadcast = now;
    member.move_pending = false;
    broadcast_move(out, id);
  } else {
    member.move_pending = true;
  }
  log(LogLevel::kDebug, now, "move", id, "ok");
  return out;
}

Dispatch RoomService::tick(Millis now) {
  Dispatch out;
  for (auto& [id, member] : members_) {
    if (member.move_pending && now - *member.last_move_broadcast >= kMoveBroadcastInterval) {
      member.last_move_broadcast = now;
      member.move_pending = false;
      broadcast_move(out, id);
    }
  }
  return out;
}

void RoomService::broadcast_move(Dispatch& out, const core::UserId& user) {
  const auto* record = room_.find(user);
  broadcast(out, wire::UserMoved{user.str(), record->position.x, record->position.y}, &user);
}

Dispatch RoomService::speak(SessionState& session, const wire::Speak& msg, Millis now) {
  Dispatch out;
  const core::UserId& id = session.user;
  auto& member = members_.at(id);
  if (member.last_seq && msg.seq <= *member.last_seq) {
    out.send(session.id, make_error(wire::ErrorCode::kBadMessage, "seq must increase"));
    log(LogLevel::kDebug, now, "speak", id, "BAD_MESSAGE");
    return out;
  }
  member.last_seq = msg.seq;

  const auto started = std::chrono::steady_clock::now();
  auto recipients = room_.compute_recipients(id);
  if (recipients) {
    // One frame for every listener: nothing in it depends on the route taken.
    const std::string frame = wire::encode(wire::Audio{id.str(), msg.seq, msg.payload});
    for (const auto& listener : *recipients) {
      out.send_frame(members_.at(listener).session, frame);
    }
  }
  const auto elapsed = std::chrono::steady_clock::now() - started;
  if (routing_samples_us_.size() < kMaxRoutingSamples) {
    routing_samples_us_.push_back(std::chrono::duration<double, std::micro>(elapsed).count());
  }
  log(LogLevel::kDebug, now, "speak", id, "ok");
  return out;
}

Dispatch RoomService::enter(SessionState& session, const wire::EnterChannel& msg, Millis now) {
  Dispatch out;
  const core::UserId& id = session.user;
  if (msg.channel < 1 || msg.channel > std::numeric_limits<int>::max()) {
    out.send(session.id, core_error(core::CoreError::kInvalidChannel));
    log(LogLevel::kInfo, now, "enter_channel", id, "INVALID_CHANNEL");
    return out;
  }
  auto effect = room_.enter_channel(id, core::ChannelId{static_cast<int>(msg.channel)});
  if (!effect) {
    out.send(session.id, core_error(effect.error()));
    log(LogLevel::kInfo, now, "enter_channel", id, wire::to_string(to_wire(effect.error())));
    return out;
  }
  wire::ChannelAck ack{effect->channel->index, to_ack(effect->kind)};
  if (faults_.broadcast_channel_ack) {
    broadcast(out, ack);
  } else {
    out.send(session.id, ack);
  }
  log(LogLevel::kInfo, now, "enter_channel", id, "ok");
  return out;
}

Dispatch RoomService::exit(SessionState& session, Millis now) {
  Dispatch out;
  const core::UserId& id = session.user;
  auto effect = room_.exit_channel(id);
  if (!effect) {
    out.send(session.id, core_error(effect.error()));
    log(LogLevel::kInfo, now, "exit_channel", id, wire::to_string(to_wire(effect.error())));
    return out;
  }
  wire::ChannelAck ack{std::nullopt, wire::AckEffect::kLeave};
  if (faults_.broadcast_channel_ack) {
    broadcast(out, ack);
  } else {
    out.send(session.id, ack);
  }
  log(LogLevel::kInfo, now, "exit_channel", id, "ok");
  return out;
}

void RoomService::broadcast(Dispatch& out, const wire::ServerMessage& msg, const core::UserId* except) const {
  const std::string frame = wire::encode(msg);
  for (const auto& [id, member] : members_) {
    if (except != nullptr && id == *except) {
      continue;
    }
    out.send_frame(member.session, frame);
  }
}

std::string RoomService::room_state_frame() const {
  wire::RoomState state;
  for (const auto& [id, record] : room_.users()) {
    state.users.push_back(wire::RosterEntry{id.str(), record.display_name, record.position.x, record.position.y});
  }
  auto json = wire::to_json(wire::ServerMessage{std::move(state)});
  if (faults_.channel_in_room_state) {
    for (auto& entry : json["users"]) {
      const auto* record = room_.find(core::UserId{entry["user_id"].get<std::string>()});
      if (auto channel = record->voice_state.channel()) {
        entry["channel"] = channel->index;
      }
    }
  }
  return json.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

void RoomService::log(LogLevel level, Millis now, std::string_view op, const core::UserId& actor,
                      std::string_view outcome) {
  if (log_ == nullptr || !log_->enabled(level)) {
    return;
  }
  log_->record(level, LogEvent{now.count(), id_, std::string(op), actor.str(), std::string(outcome)});
}

}  // namespace hush::relay
