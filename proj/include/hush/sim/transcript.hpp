#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hush::sim {

/// One frame delivered to one actor.
///
/// `step` is the index of the scenario action that caused the delivery;
/// deliveries flushed by the passage of time before action k carry step k,
/// and the final flush carries step == actions.size(). `kind` is the frame's
/// message type, or "CLOSE" when the server closed the session. `from` is
/// the actor the frame is about (speaker, moved/joined/left user) or, for
/// replies, the acting actor. `detail` is the exact frame text.
struct DeliveryRecord {
  std::size_t step = 0;
  std::int64_t t = 0;
  std::string kind;
  std::string from;
  std::string to;
  std::string detail;

  friend bool operator==(const DeliveryRecord&, const DeliveryRecord&) = default;
};

struct Transcript {
  std::uint64_t seed = 0;
  std::vector<DeliveryRecord> records;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

nlohmann::json to_json(const Transcript& transcript);
Transcript transcript_from_json(const nlohmann::json& j);

/// Canonical text form; equal transcripts serialize to identical bytes.
std::string serialize(const Transcript& transcript);

}  // namespace hush::sim
