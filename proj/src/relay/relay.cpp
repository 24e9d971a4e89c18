#include "hush/relay/relay.hpp"

namespace hush::relay {

Relay::Relay(const ServerConfig& config, core::Faults faults, EventLog* log) {
  for (const auto& spec : config.rooms) {
    rooms_.try_emplace(spec.room_id, spec.room_id, spec.config, faults, log);
  }
}

SessionId Relay::connect(Millis now) {
  const SessionId id = next_session_++;
  SessionState state;
  state.id = id;
  state.last_seen = now;
  sessions_.emplace(id, std::move(state));
  return id;
}

Dispatch Relay::handle_frame(SessionId session, std::string_view frame, Millis now) {
  auto it = sessions_.find(session);
  if (it == sessions_.end()) {
    return {};
  }
  auto decoded = wire::decode_client(frame);
  if (!decoded) {
    it->second.last_seen = now;
    return finish(reject_malformed(it->second, decoded.error()), now);
  }
  return handle_message(session, *decoded, now);
}

Dispatch Relay::handle_message(SessionId session, const wire::ClientMessage& msg, Millis now) {
  auto it = sessions_.find(session);
  if (it == sessions_.end()) {
    return {};
  }
  SessionState& state = it->second;
  state.last_seen = now;
  auto admission = admit(state, msg, [this](std::string_view id) { return rooms_.contains(id); });
  if (auto* reply = std::get_if<Dispatch>(&admission)) {
    return finish(std::move(*reply), now);
  }
  auto& room = rooms_.find(std::get<RouteToRoom>(admission).room_id)->second;
  return finish(room.execute(state, msg, now), now);
}

Dispatch Relay::on_disconnect(SessionId session, Millis now) {
  auto it = sessions_.find(session);
  if (it == sessions_.end()) {
    return {};
  }
  Dispatch out;
  if (it->second.in_room()) {
    out = rooms_.find(it->second.room_id)->second.leave(it->second, now);
  }
  sessions_.erase(it);
  return out;
}

Dispatch Relay::tick(Millis now) {
  Dispatch out;
  for (auto& [id, room] : rooms_) {
    out.append(room.tick(now));
  }
  return out;
}

Dispatch Relay::finish(Dispatch out, Millis now) {
  const auto closing = out.close;
  for (auto id : closing) {
    out.append(on_disconnect(id, now));
  }
  return out;
}

const RoomService* Relay::room(std::string_view room_id) const {
  auto it = rooms_.find(room_id);
  return it == rooms_.end() ? nullptr : &it->second;
}

const SessionState* Relay::session(SessionId id) const {
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : &it->second;
}

}  // namespace hush::relay
