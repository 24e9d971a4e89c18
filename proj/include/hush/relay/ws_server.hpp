#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "hush/core/room.hpp"
#include "hush/relay/config.hpp"
#include "hush/relay/event_log.hpp"

namespace hush::relay {

/// WebSocket transport for the relay: text frames, one JSON message each.
///
/// Connections do I/O on their own strands. Every command for a room runs on
/// that room's strand, so each room sees one serial order of commands that
/// respects each session's send order. A session reads its next frame only
/// after the previous one has been fully handled.
class WsServer {
 public:
  WsServer(ServerConfig config, EventLog& log, core::Faults faults = {});
  ~WsServer();

  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  /// Binds the configured listen address. Returns the bound port (useful
  /// when the configured port is 0).
  unsigned short listen();

  /// Serves on the calling thread plus `threads - 1` helpers until stop().
  void run(std::size_t threads = 1);

  /// Serves on `threads` background threads.
  void start(std::size_t threads = 1);

  void stop();

  /// Snapshot of a room's SPEAK routing timings in microseconds.
  std::vector<double> routing_samples_us(const std::string& room_id);

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace hush::relay
