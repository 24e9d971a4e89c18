#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "hush/wire/codec.hpp"

using namespace hush::wire;

namespace {

template <typename T>
T decode_as(std::string_view frame) {
  auto r = decode_client(frame);
  REQUIRE_MESSAGE(r.ok(), (r.ok() ? "" : r.error().reason));
  REQUIRE(std::holds_alternative<T>(*r));
  return std::get<T>(*r);
}

bool rejected(std::string_view frame) { return !decode_client(frame).ok(); }

std::string random_name(std::mt19937_64& rng) {
  static const std::vector<std::string> kPieces = {"a", "Z", "7", " ", "_", "-", "\"", "\\", "/", "\xc3\xa9", "\xe2\x82\xac"};
  std::string s;
  for (std::size_t n = 1 + rng() % 20; n > 0; --n) {
    s += kPieces[rng() % kPieces.size()];
  }
  return s;
}

std::string random_bytes(std::mt19937_64& rng, std::size_t max) {
  std::string s(rng() % (max + 1), '\0');
  for (auto& c : s) {
    c = static_cast<char>(rng() & 0xFF);
  }
  return s;
}

double random_coordinate(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  return rng() % 4 == 0 ? static_cast<double>(static_cast<std::int64_t>(rng() % 2000) - 1000) : d(rng);
}

std::int64_t random_int(std::mt19937_64& rng) {
  switch (rng() % 4) {
  case 0:
    return static_cast<std::int64_t>(rng());
  case 1:
    return std::numeric_limits<std::int64_t>::min();
  case 2:
    return std::numeric_limits<std::int64_t>::max();
  default:
    return static_cast<std::int64_t>(rng() % 20) - 5;
  }
}

ClientMessage random_client(std::mt19937_64& rng) {
  switch (rng() % 7) {
  case 0:
    return Hello{random_int(rng), random_name(rng)};
  case 1:
    return JoinRoom{random_name(rng)};
  case 2:
    return Move{random_coordinate(rng), random_coordinate(rng)};
  case 3:
    return Speak{random_int(rng), random_bytes(rng, 200)};
  case 4:
    return EnterChannel{random_int(rng)};
  case 5:
    return ExitChannel{};
  default:
    return Ping{random_int(rng)};
  }
}

ServerMessage random_server(std::mt19937_64& rng) {
  switch (rng() % 9) {
  case 0: {
    Welcome w;
    if (rng() % 2 == 0) {
      w.user_id = random_name(rng);
      w.room_config = RoomConfigInfo{random_int(rng), random_int(rng), random_coordinate(rng)};
    }
    return w;
  }
  case 1: {
    RoomState rs;
    for (std::size_t i = rng() % 5; i > 0; --i) {
      rs.users.push_back({random_name(rng), random_name(rng), random_coordinate(rng), random_coordinate(rng)});
    }
    return rs;
  }
  case 2:
    return UserJoined{random_name(rng), random_name(rng), random_coordinate(rng), random_coordinate(rng)};
  case 3:
    return UserLeft{random_name(rng)};
  case 4:
    return UserMoved{random_name(rng), random_coordinate(rng), random_coordinate(rng)};
  case 5:
    return Audio{random_name(rng), random_int(rng), random_bytes(rng, 200)};
  case 6: {
    ChannelAck ack;
    ack.effect = static_cast<AckEffect>(rng() % 3);
    if (rng() % 3 != 0) {
      ack.channel = random_int(rng);
    }
    return ack;
  }
  case 7:
    return Error{static_cast<ErrorCode>(rng() % 6), random_name(rng)};
  default:
    return Pong{random_int(rng)};
  }
}

}  // namespace

TEST_SUITE("encode") {
  TEST_CASE("smallest message") { CHECK(encode(ClientMessage{Ping{1}}) == R"({"type":"PING","nonce":1})"); }

  TEST_CASE("enter channel six") {
    CHECK(encode(ClientMessage{EnterChannel{6}}) == R"({"type":"ENTER_CHANNEL","channel":6})");
  }

  TEST_CASE("server messages use the documented field names") {
    CHECK(encode(ServerMessage{ChannelAck{3, AckEffect::kJoin}}) == R"({"type":"CHANNEL_ACK","channel":3,"effect":"join"})");
    CHECK(encode(ServerMessage{ChannelAck{std::nullopt, AckEffect::kLeave}}) ==
          R"({"type":"CHANNEL_ACK","channel":null,"effect":"leave"})");
    CHECK(encode(ServerMessage{Audio{"u1", 4, "hi"}}) == R"({"type":"AUDIO","speaker_id":"u1","seq":4,"payload":"aGk="})");
    CHECK(encode(ServerMessage{UserLeft{"u2"}}) == R"({"type":"USER_LEFT","user_id":"u2"})");
    CHECK(encode(ServerMessage{Error{ErrorCode::kRoomFull, "room is full"}}) ==
          R"({"type":"ERROR","code":"ROOM_FULL","message":"room is full"})");
    CHECK(encode(ServerMessage{Welcome{"u1", RoomConfigInfo{7, 10, 25.0}}}) ==
          R"({"type":"WELCOME","user_id":"u1","room_config":{"num_channels":7,"max_users":10,"hearing_radius":25.0}})");
  }

  TEST_CASE("error codes have stable names") {
    const std::pair<ErrorCode, std::string_view> expected[] = {
        {ErrorCode::kInvalidChannel, "INVALID_CHANNEL"}, {ErrorCode::kNotInChannel, "NOT_IN_CHANNEL"},
        {ErrorCode::kRoomFull, "ROOM_FULL"},             {ErrorCode::kUnknownRoom, "UNKNOWN_ROOM"},
        {ErrorCode::kBadMessage, "BAD_MESSAGE"},         {ErrorCode::kProtocolVersion, "PROTOCOL_VERSION"},
    };
    for (const auto& [code, name] : expected) {
      CHECK(to_string(code) == name);
      CHECK(error_code_from_string(name) == code);
    }
  }
}

TEST_SUITE("decode") {
  TEST_CASE("exit channel has no fields") { decode_as<ExitChannel>(R"({"type":"EXIT_CHANNEL"})"); }

  TEST_CASE("field order is irrelevant") {
    CHECK(decode_as<Hello>(R"({"display_name":"A","type":"HELLO","proto_version":1})") == Hello{1, "A"});
  }

  TEST_CASE("missing fields are rejected") {
    CHECK(rejected(R"({"type":"ENTER_CHANNEL"})"));
    CHECK(rejected(R"({"type":"MOVE","x":1})"));
    CHECK(rejected(R"({"type":"HELLO","proto_version":1})"));
  }

  TEST_CASE("unknown types and fields are rejected") {
    CHECK(rejected(R"({"type":"TELEPORT"})"));
    CHECK(rejected(R"({"type":"EXIT_CHANNEL","channel":2})"));
    CHECK(rejected(R"({"type":"PING","nonce":1,"extra":null})"));
    CHECK(rejected(R"({"nonce":1})"));
    CHECK(rejected(R"({"type":7})"));
    CHECK(rejected(R"({"type":"WELCOME","user_id":null,"room_config":null})"));
  }

  TEST_CASE("wrong scalar kinds are rejected") {
    CHECK(rejected(R"({"type":"ENTER_CHANNEL","channel":"3"})"));
    CHECK(rejected(R"({"type":"ENTER_CHANNEL","channel":3.0})"));
    CHECK(rejected(R"({"type":"ENTER_CHANNEL","channel":3.5})"));
    CHECK(rejected(R"({"type":"ENTER_CHANNEL","channel":true})"));
    CHECK(rejected(R"({"type":"ENTER_CHANNEL","channel":18446744073709551615})"));
    CHECK(rejected(R"({"type":"MOVE","x":"1","y":2})"));
    CHECK(rejected(R"({"type":"HELLO","proto_version":1,"display_name":5})"));
    CHECK(rejected(R"({"type":"SPEAK","seq":1,"payload":[1,2]})"));
  }

  TEST_CASE("integers are accepted where numbers are expected") {
    CHECK(decode_as<Move>(R"({"type":"MOVE","x":3,"y":-4})") == Move{3, -4});
    CHECK(decode_as<Move>(R"({"type":"MOVE","x":1e2,"y":0.5})") == Move{100, 0.5});
  }

  TEST_CASE("trailing garbage and non-objects are rejected") {
    CHECK(rejected(R"({"type":"EXIT_CHANNEL"} x)"));
    CHECK(rejected(R"({"type":"EXIT_CHANNEL"}{"type":"EXIT_CHANNEL"})"));
    CHECK(rejected(R"(["EXIT_CHANNEL"])"));
    CHECK(rejected(""));
    CHECK(rejected("null"));
  }

  TEST_CASE("names must be 1-64 bytes") {
    CHECK(rejected(R"({"type":"JOIN_ROOM","room_id":""})"));
    CHECK(rejected(R"({"type":"HELLO","proto_version":1,"display_name":")" + std::string(65, 'a') + "\"}"));
    CHECK(decode_as<JoinRoom>(R"({"type":"JOIN_ROOM","room_id":")" + std::string(64, 'a') + "\"}").room_id.size() ==
          64);
  }

  TEST_CASE("payloads are base-64 and capped at 64 KiB") {
    CHECK(decode_as<Speak>(R"({"type":"SPEAK","seq":1,"payload":"aGk="})").payload == "hi");
    CHECK(decode_as<Speak>(R"({"type":"SPEAK","seq":1,"payload":""})").payload.empty());
    CHECK(rejected(R"({"type":"SPEAK","seq":1,"payload":"hi"})"));
    const std::string at_limit = base64_encode(std::string(kMaxPayloadBytes, 'x'));
    const std::string over = base64_encode(std::string(kMaxPayloadBytes + 1, 'x'));
    CHECK(decode_as<Speak>(R"({"type":"SPEAK","seq":1,"payload":")" + at_limit + "\"}").payload.size() ==
          kMaxPayloadBytes);
    CHECK(rejected(R"({"type":"SPEAK","seq":1,"payload":")" + over + "\"}"));
  }

  TEST_CASE("non-finite numbers cannot be smuggled in") {
    CHECK(rejected(R"({"type":"MOVE","x":NaN,"y":0})"));
    CHECK(rejected(R"({"type":"MOVE","x":1e400,"y":0})"));
  }

  TEST_CASE("deep nesting is rejected without recursion") {
    std::string deep = R"({"type":"PING","nonce":)" + std::string(100000, '[') + std::string(100000, ']') + "}";
    CHECK(rejected(deep));
  }

  TEST_CASE("errors carry a readable reason") {
    auto r = decode_client(R"({"type":"ENTER_CHANNEL"})");
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().reason.find("channel") != std::string::npos);
  }
}

TEST_SUITE("properties") {
  TEST_CASE("client messages round-trip") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 5000; ++i) {
      const ClientMessage m = random_client(rng);
      auto back = decode_client(encode(m));
      REQUIRE_MESSAGE(back.ok(), encode(m));
      CHECK(*back == m);
    }
  }

  TEST_CASE("server messages round-trip") {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 5000; ++i) {
      const ServerMessage m = random_server(rng);
      auto back = decode_server(encode(m));
      REQUIRE_MESSAGE(back.ok(), encode(m));
      CHECK_MESSAGE(*back == m, encode(m));
      CHECK(encode(*back) == encode(m));
    }
  }

  TEST_CASE("decode is total on random bytes") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20000; ++i) {
      const std::string junk = random_bytes(rng, 64);
      CHECK_NOTHROW((void)decode_client(junk));
      CHECK_NOTHROW((void)decode_server(junk));
    }
  }

  TEST_CASE("decode is total on mutated valid frames") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 20000; ++i) {
      std::string frame = encode(random_client(rng));
      for (std::size_t k = 1 + rng() % 4; k > 0 && !frame.empty(); --k) {
        frame[rng() % frame.size()] = static_cast<char>(rng() & 0xFF);
      }
      CHECK_NOTHROW((void)decode_client(frame));
      CHECK_NOTHROW((void)decode_server(frame));
    }
  }

  TEST_CASE("only WELCOME and CHANNEL_ACK can carry channel information") {
    // Anything channel-like in a field name, per server schema.
    for (const auto type : server_message_types()) {
      for (const auto field : server_schema_fields(type)) {
        const bool channel_like = field.find("channel") != std::string_view::npos ||
                                  field.find("voice") != std::string_view::npos ||
                                  field.find("member") != std::string_view::npos;
        if (channel_like) {
          CHECK((type == "WELCOME" || type == "CHANNEL_ACK"));
        }
      }
    }
    const auto& audio = server_schema_fields("AUDIO");
    CHECK(std::set<std::string_view>(audio.begin(), audio.end()) ==
          std::set<std::string_view>{"type", "speaker_id", "seq", "payload"});
  }
}

TEST_SUITE("base64") {
  TEST_CASE("standard test vectors") {
    const std::pair<std::string_view, std::string_view> vectors[] = {
        {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
        {"foobar", "Zm9vYmFy"},
    };
    for (const auto& [plain, encoded] : vectors) {
      CHECK(base64_encode(plain) == encoded);
      CHECK(base64_decode(encoded) == std::string(plain));
    }
  }

  TEST_CASE("non-canonical or foreign text is rejected") {
    for (const char* bad : {"Zg", "Zg=", "Zh==", "Zm9=", "Z===", "=Zg=", "Zg==Zg==", "Zm9v\n", "Zm-_", "Zm 9v"}) {
      CHECK_FALSE(base64_decode(bad).has_value());
    }
  }

  TEST_CASE("random bytes round-trip") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 2000; ++i) {
      const std::string bytes = random_bytes(rng, 100);
      CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
  }
}
