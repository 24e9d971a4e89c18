#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "hush/core/room.hpp"
#include "hush/relay/config.hpp"
#include "hush/relay/room_service.hpp"
#include "hush/relay/session.hpp"

namespace hush::relay {

/// Single-threaded relay: session table plus the registry of statically
/// configured rooms. Commands run in call order, which is the serial order
/// a live server's room queues would produce.
class Relay {
 public:
  explicit Relay(const ServerConfig& config, core::Faults faults = {}, EventLog* log = nullptr);

  SessionId connect(Millis now);

  /// Decodes one text frame and handles it.
  Dispatch handle_frame(SessionId session, std::string_view frame, Millis now);
  Dispatch handle_message(SessionId session, const wire::ClientMessage& msg, Millis now);

  /// Removes the session and, if it had joined, its user.
  Dispatch on_disconnect(SessionId session, Millis now);

  Dispatch tick(Millis now);

  const RoomService* room(std::string_view room_id) const;
  const SessionState* session(SessionId id) const;
  const std::map<std::string, RoomService, std::less<>>& rooms() const noexcept { return rooms_; }

 private:
  // Server-requested closes take effect immediately.
  Dispatch finish(Dispatch out, Millis now);

  std::map<std::string, RoomService, std::less<>> rooms_;
  std::map<SessionId, SessionState> sessions_;
  SessionId next_session_ = 1;
};

}  // namespace hush::relay
