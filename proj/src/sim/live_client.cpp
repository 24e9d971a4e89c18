#include "hush/sim/live_client.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "hush/sim/runner.hpp"
#include "hush/wire/codec.hpp"

namespace hush::sim {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct LiveClient::Impl {
  explicit Impl(std::chrono::milliseconds t) : ws(ioc), timeout(t) {}

  // Runs the io_context until `done` or the timeout; cancels on timeout.
  bool run_until(const bool& done) {
    ioc.restart();
    ioc.run_for(timeout);
    if (done) {
      return true;
    }
    beast::get_lowest_layer(ws).cancel();
    ioc.restart();
    ioc.run();
    return false;
  }

  net::io_context ioc;
  websocket::stream<beast::tcp_stream> ws;
  beast::flat_buffer buffer;
  std::chrono::milliseconds timeout;
  bool open = false;
};

LiveClient::LiveClient(const std::string& host, unsigned short port, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>(timeout)) {
  try {
    tcp::resolver resolver(impl_->ioc);
    auto results = resolver.resolve(host, std::to_string(port));
    beast::get_lowest_layer(impl_->ws).connect(results);
    impl_->ws.handshake(host + ":" + std::to_string(port), "/");
    impl_->ws.text(true);
    impl_->open = true;
  } catch (const std::exception& e) {
    throw ConnectionFailed("cannot connect to " + host + ":" + std::to_string(port) + ": " + e.what());
  }
}

LiveClient::~LiveClient() {
  try {
    close();
  } catch (...) {
  }
}

void LiveClient::send(std::string_view frame) {
  if (!impl_->open) {
    throw ConnectionFailed("session is closed");
  }
  beast::error_code ec;
  impl_->ws.write(net::buffer(frame.data(), frame.size()), ec);
  if (ec) {
    impl_->open = false;
    throw ConnectionFailed("write failed: " + ec.message());
  }
}

void LiveClient::send(const wire::ClientMessage& msg) { send(wire::encode(msg)); }

std::optional<std::string> LiveClient::receive() {
  if (!impl_->open) {
    return std::nullopt;
  }
  bool done = false;
  beast::error_code result;
  impl_->ws.async_read(impl_->buffer, [&](beast::error_code ec, std::size_t) {
    result = ec;
    done = true;
  });
  if (!impl_->run_until(done)) {
    impl_->open = false;
    throw ConnectionFailed("timed out waiting for a frame");
  }
  if (result) {
    impl_->open = false;
    if (result == websocket::error::closed || result == net::error::eof ||
        result == net::error::connection_reset) {
      return std::nullopt;
    }
    throw ConnectionFailed("read failed: " + result.message());
  }
  std::string frame = beast::buffers_to_string(impl_->buffer.data());
  impl_->buffer.consume(impl_->buffer.size());
  return frame;
}

void LiveClient::close() {
  if (!impl_->open) {
    return;
  }
  impl_->open = false;
  bool done = false;
  impl_->ws.async_close(websocket::close_code::normal, [&](beast::error_code) { done = true; });
  impl_->run_until(done);
}

bool LiveClient::is_open() const noexcept { return impl_->open; }

}  // namespace hush::sim
