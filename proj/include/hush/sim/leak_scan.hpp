#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hush/sim/shadow.hpp"
#include "hush/sim/transcript.hpp"

namespace hush::sim {

struct LeakViolation {
  std::size_t offset = 0;  // index into Transcript::records
  std::string recipient;
  std::string kind;
  std::string reason;
};

struct LeakReport {
  std::size_t scanned = 0;
  std::vector<LeakViolation> violations;

  bool clean() const noexcept { return violations.empty(); }
};

/// Audits every delivered frame for channel information about anyone other
/// than its recipient.
///
/// Flags: channel-bearing keys outside CHANNEL_ACK; any frame that deviates
/// from its wire schema (a smuggled field is a potential side channel);
/// CHANNEL_ACK or populated WELCOME delivered to someone other than the
/// actor; CHANNEL_ACK contents disagreeing with the recipient's true
/// channel; and AUDIO frames for one (speaker, seq) that differ between
/// recipients, which would let listeners tell routes apart.
LeakReport leak_scan(const Transcript& transcript, const ChannelHistory& ground_truth);

}  // namespace hush::sim
