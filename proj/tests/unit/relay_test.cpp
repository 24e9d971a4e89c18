#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "hush/relay/config.hpp"
#include "hush/relay/relay.hpp"

using namespace hush;
using namespace hush::relay;
using nlohmann::json;

namespace {

Millis at(std::int64_t ms) { return Millis{ms}; }

// Drives a Relay and keeps per-session inboxes of parsed frames.
struct Harness {
  explicit Harness(ServerConfig config = {}, core::Faults faults = {}, EventLog* log = nullptr)
      : relay(config, faults, log) {}

  SessionId connect() { return relay.connect(now); }

  void take(Dispatch out) {
    for (auto& m : out.messages) {
      inbox[m.target].push_back(json::parse(m.frame));
      raw[m.target].push_back(m.frame);
    }
    for (auto id : out.close) {
      closed.insert(id);
    }
  }

  void send(SessionId s, const wire::ClientMessage& msg) { take(relay.handle_message(s, msg, now)); }
  void send_frame(SessionId s, std::string_view frame) { take(relay.handle_frame(s, frame, now)); }
  void disconnect(SessionId s) { take(relay.on_disconnect(s, now)); }
  void advance(std::int64_t ms) {
    now = at(ms);
    take(relay.tick(now));
  }

  // HELLO + JOIN_ROOM; returns the session and records the assigned user id.
  SessionId join(const std::string& name, const std::string& room = "main") {
    const SessionId s = connect();
    send(s, wire::Hello{1, name});
    send(s, wire::JoinRoom{room});
    for (const auto& f : inbox[s]) {
      if (f["type"] == "WELCOME" && f["user_id"].is_string()) {
        user[name] = f["user_id"].get<std::string>();
      }
    }
    return s;
  }

  std::vector<json> drain(SessionId s) {
    auto out = std::move(inbox[s]);
    inbox[s].clear();
    raw[s].clear();
    return out;
  }

  void drain_all() {
    inbox.clear();
    raw.clear();
  }

  Relay relay;
  Millis now{0};
  std::map<SessionId, std::vector<json>> inbox;
  std::map<SessionId, std::vector<std::string>> raw;
  std::set<SessionId> closed;
  std::map<std::string, std::string> user;
};

std::vector<std::string> types(const std::vector<json>& frames) {
  std::vector<std::string> out;
  for (const auto& f : frames) {
    out.push_back(f["type"].get<std::string>());
  }
  return out;
}

std::string error_code(const std::vector<json>& frames) {
  REQUIRE(frames.size() == 1);
  REQUIRE(frames[0]["type"] == "ERROR");
  return frames[0]["code"].get<std::string>();
}

}  // namespace

TEST_SUITE("handshake") {
  TEST_CASE("HELLO gets an unpopulated WELCOME") {
    Harness h;
    auto s = h.connect();
    h.send(s, wire::Hello{1, "A"});
    auto frames = h.drain(s);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0] == json::parse(R"({"type":"WELCOME","user_id":null,"room_config":null})"));
  }

  TEST_CASE("JOIN_ROOM gets WELCOME with the room config, then ROOM_STATE") {
    Harness h;
    auto a = h.join("A");
    auto frames = h.drain(a);
    REQUIRE(types(frames) == std::vector<std::string>{"WELCOME", "WELCOME", "ROOM_STATE"});
    CHECK(frames[1]["room_config"] == json::parse(R"({"num_channels":7,"max_users":10,"hearing_radius":25.0})"));
    CHECK(frames[2]["users"].size() == 1);
  }

  TEST_CASE("messages before HELLO are refused") {
    Harness h;
    auto s = h.connect();
    h.send(s, wire::JoinRoom{"main"});
    CHECK(error_code(h.drain(s)) == "BAD_MESSAGE");
    h.send(s, wire::Ping{3});
    CHECK(error_code(h.drain(s)) == "BAD_MESSAGE");
  }

  TEST_CASE("protocol version mismatch errors and closes") {
    Harness h;
    auto s = h.connect();
    h.send(s, wire::Hello{2, "A"});
    CHECK(error_code(h.drain(s)) == "PROTOCOL_VERSION");
    CHECK(h.closed.contains(s));
    CHECK(h.relay.session(s) == nullptr);
  }

  TEST_CASE("unknown rooms are refused") {
    Harness h;
    auto s = h.connect();
    h.send(s, wire::Hello{1, "A"});
    h.drain(s);
    h.send(s, wire::JoinRoom{"lobby"});
    CHECK(error_code(h.drain(s)) == "UNKNOWN_ROOM");
  }

  TEST_CASE("room commands outside a room are refused") {
    Harness h;
    auto s = h.connect();
    h.send(s, wire::Hello{1, "A"});
    h.drain(s);
    h.send(s, wire::EnterChannel{3});
    CHECK(error_code(h.drain(s)) == "UNKNOWN_ROOM");
    h.send(s, wire::Ping{9});
    CHECK(h.drain(s) == std::vector<json>{json::parse(R"({"type":"PONG","nonce":9})")});
  }

  TEST_CASE("second JOIN_ROOM is refused") {
    Harness h;
    auto a = h.join("A");
    h.drain(a);
    h.send(a, wire::JoinRoom{"main"});
    CHECK(error_code(h.drain(a)) == "BAD_MESSAGE");
    CHECK(h.relay.room("main")->room().size() == 1);
  }
}

TEST_SUITE("handle_message") {
  TEST_CASE("private SPEAK reaches the co-member only") {
    Harness h;
    auto a = h.join("A");
    auto b = h.join("B");
    auto c = h.join("C");
    h.send(a, wire::EnterChannel{3});
    h.send(b, wire::EnterChannel{3});
    h.drain_all();
    h.send(a, wire::Speak{1, "secret"});
    CHECK(h.drain(a).empty());
    CHECK(h.drain(c).empty());
    auto got = h.drain(b);
    REQUIRE(got.size() == 1);
    CHECK(got[0] == json{{"type", "AUDIO"}, {"speaker_id", h.user["A"]}, {"seq", 1}, {"payload", "c2VjcmV0"}});
  }

  TEST_CASE("ENTER_CHANNEL acks the actor and nobody else") {
    Harness h;
    auto a = h.join("A");
    auto b = h.join("B");
    auto c = h.join("C");
    h.drain_all();
    h.send(a, wire::EnterChannel{3});
    CHECK(h.drain(a) == std::vector<json>{json::parse(R"({"type":"CHANNEL_ACK","channel":3,"effect":"join"})")});
    CHECK(h.drain(b).empty());
    CHECK(h.drain(c).empty());
  }

  TEST_CASE("switch and leave acks") {
    Harness h;
    auto a = h.join("A");
    h.drain_all();
    h.send(a, wire::EnterChannel{3});
    h.send(a, wire::EnterChannel{3});
    h.send(a, wire::EnterChannel{5});
    h.send(a, wire::ExitChannel{});
    h.send(a, wire::ExitChannel{});
    h.send(a, wire::EnterChannel{8});
    auto frames = h.drain(a);
    REQUIRE(frames.size() == 6);
    CHECK(frames[0]["effect"] == "join");
    CHECK(frames[1]["effect"] == "join");
    CHECK(frames[1]["channel"] == 3);
    CHECK(frames[2]["effect"] == "switch");
    CHECK(frames[2]["channel"] == 5);
    CHECK(frames[3] == json::parse(R"({"type":"CHANNEL_ACK","channel":null,"effect":"leave"})"));
    CHECK(frames[4]["code"] == "NOT_IN_CHANNEL");
    CHECK(frames[5]["code"] == "INVALID_CHANNEL");
  }

  TEST_CASE("the eleventh JOIN_ROOM on the default config is ROOM_FULL") {
    Harness h;
    std::vector<SessionId> sessions;
    for (int i = 0; i < 10; ++i) {
      sessions.push_back(h.join("user" + std::to_string(i)));
    }
    h.drain_all();
    auto k = h.join("K");
    auto frames = h.drain(k);
    REQUIRE(frames.size() == 2);
    CHECK(frames[1]["code"] == "ROOM_FULL");
    for (auto s : sessions) {
      CHECK(h.drain(s).empty());
    }
    CHECK(h.relay.room("main")->room().size() == 10);
  }

  TEST_CASE("joins are announced to others without channel data") {
    Harness h;
    auto a = h.join("A");
    h.send(a, wire::EnterChannel{2});
    h.drain_all();
    auto b = h.join("B");
    auto to_a = h.drain(a);
    REQUIRE(to_a.size() == 1);
    CHECK(to_a[0] == json{{"type", "USER_JOINED"}, {"user_id", h.user["B"]}, {"display_name", "B"}, {"x", 0.0},
                          {"y", 0.0}});
    auto to_b = h.drain(b);
    REQUIRE(to_b.size() == 3);
    for (const auto& entry : to_b[2]["users"]) {
      CHECK(entry.size() == 4);
    }
  }

  TEST_CASE("SPEAK seq must increase") {
    Harness h;
    auto a = h.join("A");
    auto b = h.join("B");
    h.drain_all();
    h.send(a, wire::Speak{5, "x"});
    h.send(a, wire::Speak{5, "y"});
    h.send(a, wire::Speak{4, "z"});
    h.send(a, wire::Speak{6, "w"});
    CHECK(types(h.drain(a)) == std::vector<std::string>{"ERROR", "ERROR"});
    auto heard = h.drain(b);
    REQUIRE(heard.size() == 2);
    CHECK(heard[0]["seq"] == 5);
    CHECK(heard[1]["seq"] == 6);
  }

  TEST_CASE("non-finite MOVE from a frame cannot reach the room") {
    Harness h;
    auto a = h.join("A");
    h.drain_all();
    h.send_frame(a, R"({"type":"MOVE","x":1e999,"y":0})");
    CHECK(error_code(h.drain(a)) == "BAD_MESSAGE");
    CHECK(h.relay.room("main")->room().users().begin()->second.position == core::Position{0, 0});
  }

  TEST_CASE("every well-formed message in a room gets a reply") {
    Harness h;
    auto a = h.join("A");
    h.drain_all();
    const wire::ClientMessage msgs[] = {wire::Move{1, 1},       wire::EnterChannel{1}, wire::EnterChannel{0},
                                        wire::ExitChannel{},    wire::ExitChannel{},   wire::Ping{1},
                                        wire::JoinRoom{"main"}, wire::Hello{1, "A"}};
    for (const auto& m : msgs) {
      h.send(a, m);
      CHECK_FALSE(h.drain(a).empty());
    }
  }
}

TEST_SUITE("moves") {
  TEST_CASE("actor gets an immediate echo, others at most one update per 50 ms") {
    Harness h;
    auto a = h.join("A");
    auto b = h.join("B");
    h.drain_all();
    h.advance(1000);
    h.send(a, wire::Move{1, 0});
    h.send(a, wire::Move{2, 0});
    h.send(a, wire::Move{3, 0});
    CHECK(h.drain(a).size() == 3);
    auto seen = h.drain(b);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0]["x"] == 1.0);
    h.advance(1049);
    CHECK(h.drain(b).empty());
    h.advance(1050);
    seen = h.drain(b);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0]["x"] == 3.0);
    h.advance(2000);
    CHECK(h.drain(b).empty());
  }

  TEST_CASE("broadcast rate stays at or under 20 per second") {
    Harness h;
    auto a = h.join("A");
    auto b = h.join("B");
    h.drain_all();
    for (int t = 0; t < 1000; t += 5) {
      h.advance(t);
      h.send(a, wire::Move{static_cast<double>(t), 0});
    }
    h.advance(1100);
    auto seen = h.drain(b);
    CHECK(seen.size() <= 21);
    CHECK(seen.size() >= 19);
    CHECK(seen.back()["x"] == 995.0);
  }
}

TEST_SUITE("disconnect") {
  TEST_CASE("private member leaving is reported without channel data") {
    Harness h;
    auto a = h.join("A");
    auto b = h.join("B");
    h.send(a, wire::EnterChannel{3});
    h.drain_all();
    h.disconnect(a);
    CHECK(h.drain(b) == std::vector<json>{json{{"type", "USER_LEFT"}, {"user_id", h.user["A"]}}});
    CHECK(h.relay.room("main")->room().size() == 1);
  }

  TEST_CASE("room survives its last user") {
    Harness h;
    auto a = h.join("A");
    h.disconnect(a);
    REQUIRE(h.relay.room("main") != nullptr);
    CHECK(h.relay.room("main")->room().size() == 0);
    auto b = h.join("B");
    CHECK(h.drain(b).size() == 3);
  }

  TEST_CASE("disconnect before HELLO emits nothing") {
    Harness h;
    auto other = h.join("A");
    h.drain_all();
    auto s = h.connect();
    h.disconnect(s);
    CHECK(h.inbox.empty());
    (void)other;
  }

  TEST_CASE("ten consecutive undecodable frames close the session") {
    Harness h;
    auto a = h.join("A");
    auto b = h.join("B");
    h.drain_all();
    for (int i = 0; i < 9; ++i) {
      h.send_frame(a, "garbage");
    }
    h.send(a, wire::Ping{1});
    for (int i = 0; i < 9; ++i) {
      h.send_frame(a, "{");
    }
    CHECK_FALSE(h.closed.contains(a));
    h.send_frame(a, "{");
    CHECK(h.closed.contains(a));
    CHECK(h.relay.session(a) == nullptr);
    auto left = h.drain(b);
    REQUIRE(left.size() == 1);
    CHECK(left[0]["type"] == "USER_LEFT");
  }

  TEST_CASE("other errors never disconnect") {
    Harness h;
    auto a = h.join("A");
    for (int i = 0; i < 30; ++i) {
      h.send(a, wire::EnterChannel{99});
      h.send(a, wire::ExitChannel{});
    }
    CHECK_FALSE(h.closed.contains(a));
  }
}

TEST_SUITE("rooms") {
  TEST_CASE("rooms with different radii route independently") {
    ServerConfig config = parse_config(R"(
rooms:
  - room_id: near
    hearing_radius: 5
  - room_id: far
    hearing_radius: 50
)");
    Harness h(config);
    auto a = h.join("A", "near");
    auto b = h.join("B", "near");
    auto c = h.join("C", "far");
    auto d = h.join("D", "far");
    h.send(b, wire::Move{10, 0});
    h.send(d, wire::Move{10, 0});
    h.drain_all();
    h.send(a, wire::Speak{1, "x"});
    h.send(c, wire::Speak{1, "y"});
    CHECK(h.drain(b).empty());
    CHECK(types(h.drain(d)) == std::vector<std::string>{"AUDIO"});
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults: one room, seven channels, ten users") {
    const ServerConfig config = load_config(std::nullopt);
    REQUIRE(config.rooms.size() == 1);
    CHECK(config.rooms[0].room_id == "main");
    CHECK(config.rooms[0].config.num_channels == 7);
    CHECK(config.rooms[0].config.max_users == 10);
    CHECK(config.rooms[0].config.hearing_radius == 25.0);
    CHECK(config.log_level == LogLevel::kInfo);
  }

  TEST_CASE("num_channels 0 is rejected with a location") {
    try {
      parse_config("rooms:\n  - room_id: main\n    num_channels: 0\n");
      FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
      const std::string what = e.what();
      CHECK(what.find("line 3") != std::string::npos);
      CHECK(what.find("num_channels") != std::string::npos);
    }
  }

  TEST_CASE("malformed documents are rejected") {
    CHECK_THROWS_AS(parse_config("rooms: [\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_config("colour: blue\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_config("log_level: loud\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_config("rooms:\n  - room_id: a\n  - room_id: a\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_config("rooms:\n  - room_id: a\n    max_users: 1\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_config("rooms:\n  - room_id: a\n    hearing_radius: -3\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_config("rooms:\n  - num_channels: 3\n"), ConfigInvalid);
    CHECK_THROWS_AS(parse_config("listen: nowhere\n"), ConfigInvalid);
    CHECK_THROWS_AS(load_config(std::filesystem::path("/nonexistent/hushd.yaml")), ConfigInvalid);
  }

  TEST_CASE("full document") {
    const ServerConfig config = parse_config(R"(
listen: 0.0.0.0:9000
log_level: debug
rooms:
  - room_id: a
    num_channels: 3
    max_users: 4
    hearing_radius: 12.5
    spawn_x: 1
    spawn_y: -2
)");
    CHECK(config.listen == "0.0.0.0:9000");
    CHECK(config.log_level == LogLevel::kDebug);
    REQUIRE(config.rooms.size() == 1);
    CHECK(config.rooms[0].config == core::RoomConfig{3, 4, 12.5, {1, -2}});
  }

  TEST_CASE("listen addresses") {
    auto a = parse_listen_address("127.0.0.1:8765");
    REQUIRE(a);
    CHECK(a->host == "127.0.0.1");
    CHECK(a->port == 8765);
    CHECK_FALSE(parse_listen_address("127.0.0.1"));
    CHECK_FALSE(parse_listen_address("host:99999"));
    CHECK_FALSE(parse_listen_address(":80"));
  }
}

TEST_SUITE("event log") {
  TEST_CASE("one line per transition, never a channel number") {
    std::vector<std::string> lines;
    EventLog log(LogLevel::kDebug, [&lines](std::string_view line) { lines.emplace_back(line); });
    Harness h({}, {}, &log);
    auto a = h.join("A");
    auto b = h.join("B");
    h.send(a, wire::EnterChannel{3});
    h.send(b, wire::EnterChannel{3});
    h.send(a, wire::EnterChannel{6});
    h.send(a, wire::Speak{1, "x"});
    h.send(b, wire::Move{4, 4});
    h.send(a, wire::ExitChannel{});
    h.disconnect(b);
    REQUIRE(lines.size() >= 8);
    for (const auto& line : lines) {
      const json j = json::parse(line);
      std::set<std::string> keys;
      for (const auto& [k, v] : j.items()) {
        keys.insert(k);
      }
      CHECK(keys == std::set<std::string>{"time", "level", "room", "op", "actor", "outcome"});
      CHECK(line.find('3') == std::string::npos);
      CHECK(line.find('6') == std::string::npos);
    }
  }

  TEST_CASE("threshold filters lower levels") {
    std::vector<std::string> lines;
    EventLog log(LogLevel::kWarn, [&lines](std::string_view line) { lines.emplace_back(line); });
    Harness h({}, {}, &log);
    h.join("A");
    CHECK(lines.empty());
    CHECK(parse_log_level("debug") == LogLevel::kDebug);
    CHECK_FALSE(parse_log_level("verbose"));
  }
}

TEST_SUITE("config") {
  TEST_CASE("the shipped example config loads") {
    const std::filesystem::path example = std::filesystem::path(HUSH_TEST_DATA_DIR) / ".." / ".." / "docs" /
                                          "hushd.example.yaml";
    const ServerConfig config = load_config(example);
    REQUIRE(config.rooms.size() == 2);
    CHECK(config.rooms[1].room_id == "quiet");
    CHECK(config.rooms[1].config.spawn == core::Position{5, 5});
  }
}
