#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hush/core/room.hpp"
#include "hush/relay/event_log.hpp"
#include "hush/relay/session.hpp"

namespace hush::relay {

/// Minimum spacing of USER_MOVED broadcasts to other members, per user (20/s).
inline constexpr Millis kMoveBroadcastInterval{50};

/// One room's ordered command executor: applies client intents to the
/// authoritative Room and fans out routed audio and redacted state.
///
/// Not thread-safe. The owner guarantees that all calls for one room are
/// serialized; this is the room's single ordered queue.
class RoomService {
 public:
  RoomService(std::string room_id, core::RoomConfig config, core::Faults faults = {},
              EventLog* log = nullptr);

  const std::string& id() const noexcept { return id_; }
  const core::Room& room() const noexcept { return room_; }
  SessionId session_of(const core::UserId& user) const;

  /// Executes JOIN_ROOM for a session outside the room, or any in-room command.
  Dispatch execute(SessionState& session, const wire::ClientMessage& msg, Millis now);

  /// Removes the session's user. Remaining members learn only that it left.
  Dispatch leave(SessionState& session, Millis now);

  /// Flushes coalesced position broadcasts that are due.
  Dispatch tick(Millis now);

  /// Wall time spent deciding and fanning out each accepted SPEAK, in microseconds.
  const std::vector<double>& routing_samples_us() const noexcept { return routing_samples_us_; }

 private:
  struct Member {
    SessionId session = 0;
    std::optional<std::int64_t> last_seq;
    std::optional<Millis> last_move_broadcast;
    bool move_pending = false;
  };

  Dispatch join(SessionState& session, Millis now);
  Dispatch move(SessionState& session, const wire::Move& msg, Millis now);
  Dispatch speak(SessionState& session, const wire::Speak& msg, Millis now);
  Dispatch enter(SessionState& session, const wire::EnterChannel& msg, Millis now);
  Dispatch exit(SessionState& session, Millis now);

  void broadcast(Dispatch& out, const wire::ServerMessage& msg, const core::UserId* except = nullptr) const;
  void broadcast_move(Dispatch& out, const core::UserId& user);
  std::string room_state_frame() const;
  void log(LogLevel level, Millis now, std::string_view op, const core::UserId& actor,
           std::string_view outcome);

  std::string id_;
  core::Room room_;
  core::Faults faults_;
  EventLog* log_;
  std::map<core::UserId, Member> members_;
  std::vector<double> routing_samples_us_;
};

wire::ErrorCode to_wire(core::CoreError error) noexcept;

}  // namespace hush::relay
