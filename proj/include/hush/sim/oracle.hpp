#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace hush::sim {

/// A room as the oracle sees it: names, coordinates, and channel numbers
/// (absent = public space).
struct OracleUser {
  std::string name;
  double x = 0.0;
  double y = 0.0;
  std::optional<long long> channel;
};

struct OracleState {
  double hearing_radius = 25.0;
  std::vector<OracleUser> users;
};

/// Recomputes who hears `speaker` by checking every listener against the two
/// audibility rules. Brute force; meant for rooms of at most eight users.
/// An unknown speaker hears nobody and is heard by nobody.
std::set<std::string> oracle_recipients(const OracleState& state, std::string_view speaker);

/// Reads {"hearing_radius": r, "users": [{"name","x","y","channel"?}]}.
OracleState oracle_state_from_json(const nlohmann::json& j);

}  // namespace hush::sim
