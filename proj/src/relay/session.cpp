#include "hush/relay/session.hpp"

namespace hush::relay {

void Dispatch::send(SessionId target, const wire::ServerMessage& msg) {
  messages.push_back(Outbound{target, wire::encode(msg)});
}

void Dispatch::send_frame(SessionId target, std::string frame) {
  messages.push_back(Outbound{target, std::move(frame)});
}

void Dispatch::append(Dispatch&& other) {
  for (auto& m : other.messages) {
    messages.push_back(std::move(m));
  }
  for (auto id : other.close) {
    close.push_back(id);
  }
}

wire::Error make_error(wire::ErrorCode code, std::string message) {
  return wire::Error{code, std::move(message)};
}

Admission admit(SessionState& session, const wire::ClientMessage& msg,
                const std::function<bool(std::string_view room_id)>& room_exists) {
  session.malformed_streak = 0;
  Dispatch reply;

  if (const auto* hello = std::get_if<wire::Hello>(&msg)) {
    if (session.greeted) {
      reply.send(session.id, make_error(wire::ErrorCode::kBadMessage, "HELLO already completed"));
      return reply;
    }
    if (hello->proto_version != wire::kProtocolVersion) {
      reply.send(session.id, make_error(wire::ErrorCode::kProtocolVersion,
                                        "server speaks protocol version " +
                                            std::to_string(wire::kProtocolVersion)));
      reply.close.push_back(session.id);
      return reply;
    }
    session.greeted = true;
    session.display_name = hello->display_name;
    reply.send(session.id, wire::Welcome{});
    return reply;
  }

  if (!session.greeted) {
    reply.send(session.id, make_error(wire::ErrorCode::kBadMessage, "HELLO required first"));
    return reply;
  }

  if (const auto* join = std::get_if<wire::JoinRoom>(&msg)) {
    if (session.in_room()) {
      reply.send(session.id, make_error(wire::ErrorCode::kBadMessage, "already in a room"));
      return reply;
    }
    if (!room_exists(join->room_id)) {
      reply.send(session.id, make_error(wire::ErrorCode::kUnknownRoom, "no such room"));
      return reply;
    }
    return RouteToRoom{join->room_id};
  }

  if (session.in_room()) {
    return RouteToRoom{session.room_id};
  }
  if (const auto* ping = std::get_if<wire::Ping>(&msg)) {
    reply.send(session.id, wire::Pong{ping->nonce});
    return reply;
  }
  reply.send(session.id, make_error(wire::ErrorCode::kUnknownRoom, "join a room first"));
  return reply;
}

Dispatch reject_malformed(SessionState& session, const wire::DecodeError& error) {
  Dispatch reply;
  reply.send(session.id, make_error(wire::ErrorCode::kBadMessage, error.reason));
  if (++session.malformed_streak >= kMalformedFloodLimit) {
    reply.close.push_back(session.id);
  }
  return reply;
}

}  // namespace hush::relay
