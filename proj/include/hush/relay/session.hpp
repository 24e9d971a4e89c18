#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hush/core/types.hpp"
#include "hush/wire/codec.hpp"
#include "hush/wire/messages.hpp"

namespace hush::relay {

using SessionId = std::uint64_t;

/// Server time in milliseconds. Virtual in simulations, steady-clock based live.
using Millis = std::chrono::milliseconds;

/// Consecutive undecodable frames that get a session disconnected.
inline constexpr int kMalformedFloodLimit = 10;

struct Outbound {
  SessionId target = 0;
  std::string frame;
};

/// Everything one command produces: frames in emission order, and sessions
/// the transport must close afterwards.
struct Dispatch {
  std::vector<Outbound> messages;
  std::vector<SessionId> close;

  void send(SessionId target, const wire::ServerMessage& msg);
  void send_frame(SessionId target, std::string frame);
  void append(Dispatch&& other);
  bool empty() const noexcept { return messages.empty() && close.empty(); }
};

/// Per-connection protocol state.
struct SessionState {
  SessionId id = 0;
  bool greeted = false;
  std::string display_name;
  std::string room_id;  // empty until JOIN_ROOM succeeds
  core::UserId user;
  int malformed_streak = 0;
  Millis last_seen{0};

  bool in_room() const noexcept { return !room_id.empty(); }
};

/// The message must be executed by this room's ordered queue.
struct RouteToRoom {
  std::string room_id;
};

using Admission = std::variant<Dispatch, RouteToRoom>;

/// Session-level handling that precedes any room: handshake, version check,
/// room lookup. Replies directly or names the room queue that owns the message.
Admission admit(SessionState& session, const wire::ClientMessage& msg,
                const std::function<bool(std::string_view room_id)>& room_exists);

/// Reply to a frame that failed to decode; closes the session on a flood.
Dispatch reject_malformed(SessionState& session, const wire::DecodeError& error);

wire::Error make_error(wire::ErrorCode code, std::string message);

}  // namespace hush::relay
