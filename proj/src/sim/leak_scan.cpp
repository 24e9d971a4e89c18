#include "hush/sim/leak_scan.hpp"

#include <map>
#include <set>

#include "hush/wire/codec.hpp"

namespace hush::sim {

namespace {

const std::set<std::string>& channel_keys() {
  static const std::set<std::string> kKeys = {"channel", "channel_id", "channels", "voice_state",
                                              "members", "private", "in_channel"};
  return kKeys;
}

// First channel-bearing key anywhere in the document, if any.
std::optional<std::string> find_channel_key(const nlohmann::json& j) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (channel_keys().contains(key)) {
        return key;
      }
      if (auto nested = find_channel_key(value)) {
        return nested;
      }
    }
  } else if (j.is_array()) {
    for (const auto& value : j) {
      if (auto nested = find_channel_key(value)) {
        return nested;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

LeakReport leak_scan(const Transcript& transcript, const ChannelHistory& ground_truth) {
  LeakReport report;
  std::map<std::pair<std::string, std::int64_t>, std::pair<std::size_t, std::string>> audio_seen;

  for (std::size_t i = 0; i < transcript.records.size(); ++i) {
    const auto& r = transcript.records[i];
    ++report.scanned;
    if (r.kind == "CLOSE") {
      continue;
    }
    std::vector<std::string> reasons;
    auto j = nlohmann::json::parse(r.detail, nullptr, false);
    if (!j.is_object()) {
      reasons.emplace_back("frame is not a JSON object");
    } else {
      if (auto decoded = wire::decode_server(r.detail); !decoded) {
        reasons.push_back("frame deviates from the wire schema: " + decoded.error().reason);
      }
      if (r.kind == "CHANNEL_ACK") {
        if (r.from != r.to) {
          reasons.push_back("channel ack for " + r.from + " delivered to " + r.to);
        } else {
          std::optional<std::int64_t> acked;
          if (j.contains("channel") && j["channel"].is_number_integer()) {
            acked = j["channel"].get<std::int64_t>();
          }
          if (acked != channel_at(ground_truth, r.to, r.step)) {
            reasons.emplace_back("channel ack disagrees with the recipient's actual channel");
          }
        }
      } else if (auto key = find_channel_key(j)) {
        reasons.push_back("field '" + *key + "' carries channel information in " + r.kind);
      }
      if (r.kind == "WELCOME" && j.contains("room_config") && !j["room_config"].is_null() && r.from != r.to) {
        reasons.push_back("welcome for " + r.from + " delivered to " + r.to);
      }
      if (r.kind == "AUDIO" && j.contains("seq") && j["seq"].is_number_integer()) {
        // Keyed by server user id: a reconnected actor is a new speaker.
        const std::string speaker =
            j.contains("speaker_id") && j["speaker_id"].is_string() ? j["speaker_id"].get<std::string>() : r.from;
        auto id = std::make_pair(speaker, j["seq"].get<std::int64_t>());
        auto [it, inserted] = audio_seen.try_emplace(id, i, r.detail);
        if (!inserted && it->second.second != r.detail) {
          reasons.push_back("audio frame differs from the copy delivered at offset " +
                            std::to_string(it->second.first));
        }
      }
    }
    if (!reasons.empty()) {
      std::string joined = reasons.front();
      for (std::size_t k = 1; k < reasons.size(); ++k) {
        joined += "; " + reasons[k];
      }
      report.violations.push_back(LeakViolation{i, r.to, r.kind, std::move(joined)});
    }
  }
  return report;
}

}  // namespace hush::sim
