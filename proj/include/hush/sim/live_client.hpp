#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "hush/wire/messages.hpp"

namespace hush::sim {

/// Blocking WebSocket client session used by the live-server harness and tests.
class LiveClient {
 public:
  /// Connects and completes the WebSocket handshake. Throws ConnectionFailed.
  LiveClient(const std::string& host, unsigned short port,
             std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  ~LiveClient();

  LiveClient(const LiveClient&) = delete;
  LiveClient& operator=(const LiveClient&) = delete;

  void send(std::string_view frame);
  void send(const wire::ClientMessage& msg);

  /// Next text frame; nullopt once the server has closed the session.
  /// Throws ConnectionFailed if nothing arrives within the timeout.
  std::optional<std::string> receive();

  void close();
  bool is_open() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hush::sim
