#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "hush/core/result.hpp"
#include "hush/wire/messages.hpp"

namespace hush::wire {

/// Why a frame was rejected. Always maps to ErrorCode::kBadMessage on the wire.
struct DecodeError {
  std::string reason;
};

nlohmann::ordered_json to_json(const ClientMessage& msg);
nlohmann::ordered_json to_json(const ServerMessage& msg);

/// One text frame holding one JSON object.
std::string encode(const ClientMessage& msg);
std::string encode(const ServerMessage& msg);

/// Strict inverse of encode. Total: any input yields a message or an error.
Result<ClientMessage, DecodeError> decode_client(std::string_view frame);
Result<ServerMessage, DecodeError> decode_server(std::string_view frame);

std::string base64_encode(std::string_view bytes);
/// Standard alphabet with padding; rejects anything else.
std::optional<std::string> base64_decode(std::string_view text);

}  // namespace hush::wire
