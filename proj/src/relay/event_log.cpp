#include "hush/relay/event_log.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

namespace hush::relay {

std::optional<LogLevel> parse_log_level(std::string_view text) noexcept {
  for (auto level : {LogLevel::kDebug, LogLevel::kInfo, LogLevel::kWarn, LogLevel::kError, LogLevel::kOff}) {
    if (to_string(level) == text) {
      return level;
    }
  }
  return std::nullopt;
}

std::string_view to_string(LogLevel level) noexcept {
  switch (level) {
  case LogLevel::kDebug:
    return "debug";
  case LogLevel::kInfo:
    return "info";
  case LogLevel::kWarn:
    return "warn";
  case LogLevel::kError:
    return "error";
  case LogLevel::kOff:
    return "off";
  }
  return "info";
}

EventLog::EventLog(LogLevel threshold, Sink sink) : threshold_(threshold), sink_(std::move(sink)) {}

EventLog EventLog::to_stdout(LogLevel threshold) {
  return EventLog(threshold, [](std::string_view line) {
    std::fwrite(line.data(), 1, line.size(), stdout);
    std::fputc('\n', stdout);
    std::fflush(stdout);
  });
}

EventLog EventLog::disabled() { return EventLog(LogLevel::kOff, {}); }

bool EventLog::enabled(LogLevel level) const noexcept {
  return sink_ && level != LogLevel::kOff && level >= threshold_;
}

void EventLog::record(LogLevel level, const LogEvent& event) {
  if (!enabled(level)) {
    return;
  }
  nlohmann::ordered_json j;
  j["time"] = event.time_ms;
  j["level"] = std::string(to_string(level));
  j["room"] = event.room;
  j["op"] = event.op;
  j["actor"] = event.actor;
  j["outcome"] = event.outcome;
  const auto line = j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
  std::lock_guard lock(mutex_);
  sink_(line);
}

}  // namespace hush::relay
