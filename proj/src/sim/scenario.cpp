#include "hush/sim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hush/sim/transcript.hpp"
#include "hush/wire/messages.hpp"

namespace hush::sim {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& reason) { throw ScenarioInvalid(reason); }

void only_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      invalid(where + ": unknown field '" + key + "'");
    }
  }
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    invalid(where + ": missing field '" + key + "'");
  }
  return *it;
}

std::int64_t as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) {
    invalid(where + " must be an integer");
  }
  return v.get<std::int64_t>();
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) {
    invalid(where + " must be a number");
  }
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) {
    invalid(where + " must be a string");
  }
  return v.get<std::string>();
}

core::RoomConfig config_from_json(const json& j) {
  if (!j.is_object()) {
    invalid("config must be an object");
  }
  only_keys(j, {"num_channels", "max_users", "hearing_radius", "spawn_x", "spawn_y"}, "config");
  core::RoomConfig config;
  if (j.contains("num_channels")) {
    config.num_channels = static_cast<int>(as_int(j["num_channels"], "config.num_channels"));
  }
  if (j.contains("max_users")) {
    config.max_users = static_cast<int>(as_int(j["max_users"], "config.max_users"));
  }
  if (j.contains("hearing_radius")) {
    config.hearing_radius = as_number(j["hearing_radius"], "config.hearing_radius");
  }
  if (j.contains("spawn_x")) {
    config.spawn.x = as_number(j["spawn_x"], "config.spawn_x");
  }
  if (j.contains("spawn_y")) {
    config.spawn.y = as_number(j["spawn_y"], "config.spawn_y");
  }
  return config;
}

ScriptAction action_from_json(const json& j, std::size_t index) {
  const std::string where = "actions[" + std::to_string(index) + "]";
  if (!j.is_object()) {
    invalid(where + " must be an object");
  }
  ScriptAction action;
  action.t_ms = as_int(field(j, "t", where), where + ".t");
  action.actor = as_string(field(j, "actor", where), where + ".actor");
  const auto op = as_string(field(j, "op", where), where + ".op");
  if (op == "join_room") {
    only_keys(j, {"t", "actor", "op"}, where);
    action.op = JoinRoomOp{};
  } else if (op == "move") {
    only_keys(j, {"t", "actor", "op", "x", "y"}, where);
    action.op = MoveOp{as_number(field(j, "x", where), where + ".x"), as_number(field(j, "y", where), where + ".y")};
  } else if (op == "speak") {
    only_keys(j, {"t", "actor", "op", "text"}, where);
    action.op = SpeakOp{as_string(field(j, "text", where), where + ".text")};
  } else if (op == "enter") {
    only_keys(j, {"t", "actor", "op", "channel"}, where);
    action.op = EnterOp{as_int(field(j, "channel", where), where + ".channel")};
  } else if (op == "exit") {
    only_keys(j, {"t", "actor", "op"}, where);
    action.op = ExitOp{};
  } else if (op == "disconnect") {
    only_keys(j, {"t", "actor", "op"}, where);
    action.op = DisconnectOp{};
  } else {
    invalid(where + ".op '" + op + "' is not a known operation");
  }
  return action;
}

}  // namespace

std::string_view op_name(const Op& op) noexcept {
  static constexpr std::string_view kNames[] = {"join_room", "move", "speak", "enter", "exit", "disconnect"};
  return kNames[op.index()];
}

std::size_t Scenario::actor_index(std::string_view name) const {
  auto it = std::find(actors.begin(), actors.end(), name);
  return it == actors.end() ? actors.size() : static_cast<std::size_t>(it - actors.begin());
}

void validate(const Scenario& scenario) {
  if (auto reason = scenario.config.validate()) {
    invalid("config: " + *reason);
  }
  if (scenario.room_id.empty() || scenario.room_id.size() > wire::kMaxNameLength) {
    invalid("room_id must be 1-64 characters");
  }
  std::set<std::string> declared;
  for (const auto& actor : scenario.actors) {
    if (actor.empty() || actor.size() > wire::kMaxNameLength) {
      invalid("actor names must be 1-64 characters");
    }
    if (!declared.insert(actor).second) {
      invalid("actor '" + actor + "' declared twice");
    }
  }
  std::int64_t last_t = 0;
  for (std::size_t i = 0; i < scenario.actions.size(); ++i) {
    const auto& action = scenario.actions[i];
    const std::string where = "actions[" + std::to_string(i) + "]";
    if (action.t_ms < 0 || action.t_ms < last_t) {
      invalid(where + ": actions must be sorted by non-negative time");
    }
    last_t = action.t_ms;
    if (!declared.contains(action.actor)) {
      invalid(where + ": actor '" + action.actor + "' is not declared");
    }
    if (const auto* move = std::get_if<MoveOp>(&action.op)) {
      if (!std::isfinite(move->x) || !std::isfinite(move->y)) {
        invalid(where + ": move coordinates must be finite");
      }
    }
    if (const auto* speak = std::get_if<SpeakOp>(&action.op)) {
      if (speak->text.size() > wire::kMaxPayloadBytes) {
        invalid(where + ": speak text exceeds 64 KiB");
      }
    }
  }
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) {
    invalid("scenario must be a JSON object");
  }
  only_keys(j, {"seed", "config", "room_id", "actors", "actions"}, "scenario");
  Scenario scenario;
  if (j.contains("seed")) {
    const auto& seed = j["seed"];
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
      invalid("seed must be a non-negative integer");
    }
    scenario.seed = seed.get<std::uint64_t>();
  }
  if (j.contains("config")) {
    scenario.config = config_from_json(j["config"]);
  }
  if (j.contains("room_id")) {
    scenario.room_id = as_string(j["room_id"], "room_id");
  }
  const auto& actors = field(j, "actors", "scenario");
  if (!actors.is_array()) {
    invalid("actors must be an array of names");
  }
  for (const auto& a : actors) {
    scenario.actors.push_back(as_string(a, "actors[]"));
  }
  const auto& actions = field(j, "actions", "scenario");
  if (!actions.is_array()) {
    invalid("actions must be an array");
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    scenario.actions.push_back(action_from_json(actions[i], i));
  }
  validate(scenario);
  return scenario;
}

json to_json(const Scenario& scenario) {
  json config = {{"num_channels", scenario.config.num_channels},
                 {"max_users", scenario.config.max_users},
                 {"hearing_radius", scenario.config.hearing_radius}};
  if (scenario.config.spawn != core::Position{}) {
    config["spawn_x"] = scenario.config.spawn.x;
    config["spawn_y"] = scenario.config.spawn.y;
  }
  json actions = json::array();
  for (const auto& a : scenario.actions) {
    json entry = {{"t", a.t_ms}, {"actor", a.actor}, {"op", std::string(op_name(a.op))}};
    if (const auto* move = std::get_if<MoveOp>(&a.op)) {
      entry["x"] = move->x;
      entry["y"] = move->y;
    } else if (const auto* speak = std::get_if<SpeakOp>(&a.op)) {
      entry["text"] = speak->text;
    } else if (const auto* enter = std::get_if<EnterOp>(&a.op)) {
      entry["channel"] = enter->channel;
    }
    actions.push_back(std::move(entry));
  }
  return json{{"seed", scenario.seed},
              {"config", std::move(config)},
              {"room_id", scenario.room_id},
              {"actors", scenario.actors},
              {"actions", std::move(actions)}};
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    invalid("cannot read scenario file " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const std::filesystem::path& path, const Scenario& scenario) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << to_json(scenario).dump(2) << '\n';
}

json to_json(const Transcript& transcript) {
  json records = json::array();
  for (const auto& r : transcript.records) {
    records.push_back(json{{"step", r.step},
                           {"t", r.t},
                           {"kind", r.kind},
                           {"from", r.from},
                           {"to", r.to},
                           {"detail", r.detail}});
  }
  return json{{"seed", transcript.seed}, {"records", std::move(records)}};
}

Transcript transcript_from_json(const json& j) {
  Transcript transcript;
  transcript.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& r : j.at("records")) {
    transcript.records.push_back(DeliveryRecord{r.at("step").get<std::size_t>(), r.at("t").get<std::int64_t>(),
                                                r.at("kind").get<std::string>(), r.at("from").get<std::string>(),
                                                r.at("to").get<std::string>(), r.at("detail").get<std::string>()});
  }
  return transcript;
}

std::string serialize(const Transcript& transcript) {
  std::ostringstream out;
  out << "{\"seed\":" << transcript.seed << ",\"records\":[";
  for (std::size_t i = 0; i < transcript.records.size(); ++i) {
    const auto& r = transcript.records[i];
    nlohmann::ordered_json entry;
    entry["step"] = r.step;
    entry["t"] = r.t;
    entry["kind"] = r.kind;
    entry["from"] = r.from;
    entry["to"] = r.to;
    entry["detail"] = r.detail;
    out << (i == 0 ? "\n" : ",\n") << entry.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
  }
  out << "\n]}\n";
  return out.str();
}

}  // namespace hush::sim
