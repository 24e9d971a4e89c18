#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace hush::relay {

enum class LogLevel { kDebug, kInfo, kWarn, kError, kOff };

std::optional<LogLevel> parse_log_level(std::string_view text) noexcept;
std::string_view to_string(LogLevel level) noexcept;

/// One room state transition. Fields name users and operations only; a
/// channel number never appears, so shipped logs cannot pair a user with
/// a channel.
struct LogEvent {
  std::int64_t time_ms = 0;
  std::string room;
  std::string op;
  std::string actor;
  std::string outcome;
};

/// Structured event log: one JSON object per line. Thread-safe.
class EventLog {
 public:
  using Sink = std::function<void(std::string_view line)>;

  EventLog(LogLevel threshold, Sink sink);

  static EventLog to_stdout(LogLevel threshold);
  static EventLog disabled();

  bool enabled(LogLevel level) const noexcept;
  void record(LogLevel level, const LogEvent& event);

 private:
  LogLevel threshold_;
  Sink sink_;
  std::mutex mutex_;
};

}  // namespace hush::relay
