#include "hush/relay/ws_server.hpp"

#include <atomic>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "hush/relay/room_service.hpp"
#include "hush/relay/session.hpp"

namespace hush::relay {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

constexpr std::size_t kMaxQueuedFrames = 8192;
constexpr std::size_t kMaxFrameBytes = 512 * 1024;
constexpr auto kTickInterval = std::chrono::milliseconds(10);

class Connection;

}  // namespace

struct WsServer::Impl {
  struct RoomSlot {
    RoomSlot(net::io_context& ioc, const RoomSpec& spec, core::Faults faults, EventLog* log)
        : service(spec.room_id, spec.config, faults, log), strand(net::make_strand(ioc)), timer(strand) {}

    RoomService service;
    net::strand<net::io_context::executor_type> strand;
    net::steady_timer timer;
  };

  Impl(ServerConfig cfg, EventLog& event_log, core::Faults f)
      : config(std::move(cfg)), log(event_log), faults(f), acceptor(net::make_strand(ioc)) {
    for (const auto& spec : config.rooms) {
      rooms.emplace(spec.room_id, std::make_unique<RoomSlot>(ioc, spec, faults, &log));
    }
  }

  Millis now() const {
    return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - epoch);
  }

  RoomSlot* room(std::string_view id) {
    auto it = rooms.find(std::string(id));
    return it == rooms.end() ? nullptr : it->second.get();
  }

  void do_accept();
  void schedule_tick(RoomSlot& slot);
  void deliver(const Dispatch& out);
  void add(SessionId id, const std::shared_ptr<Connection>& conn) {
    std::lock_guard lock(registry_mutex);
    registry[id] = conn;
  }
  void remove(SessionId id) {
    std::lock_guard lock(registry_mutex);
    registry.erase(id);
  }

  ServerConfig config;
  EventLog& log;
  core::Faults faults;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::map<std::string, std::unique_ptr<RoomSlot>> rooms;
  std::mutex registry_mutex;
  std::unordered_map<SessionId, std::weak_ptr<Connection>> registry;
  std::atomic<SessionId> next_session{1};
  std::chrono::steady_clock::time_point epoch = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, WsServer::Impl& server) : ws_(std::move(socket)), server_(server) {
    state_.id = server_.next_session++;
    state_.last_seen = server_.now();
  }

  void run() {
    net::dispatch(ws_.get_executor(), beast::bind_front_handler(&Connection::on_run, shared_from_this()));
  }

  /// Queues one text frame. Safe from any thread.
  void send(std::string frame) {
    net::post(ws_.get_executor(), [self = shared_from_this(), frame = std::move(frame)]() mutable {
      self->enqueue(std::move(frame));
    });
  }

 private:
  void on_run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kMaxFrameBytes);
    ws_.text(true);
    ws_.async_accept(beast::bind_front_handler(&Connection::on_accept, shared_from_this()));
  }

  void on_accept(beast::error_code ec) {
    if (ec) {
      return;
    }
    server_.add(state_.id, shared_from_this());
    do_read();
  }

  void do_read() {
    if (closing_) {
      return;
    }
    ws_.async_read(buffer_, beast::bind_front_handler(&Connection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      shutdown(false);
      return;
    }
    const bool text = ws_.got_text();
    std::string frame = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    state_.last_seen = server_.now();

    auto decoded = text ? wire::decode_client(frame)
                        : Result<wire::ClientMessage, wire::DecodeError>(wire::DecodeError{"binary frames are not accepted"});
    if (!decoded) {
      complete(reject_malformed(state_, decoded.error()));
      return;
    }
    auto admission = admit(state_, *decoded, [this](std::string_view id) { return server_.room(id) != nullptr; });
    if (auto* reply = std::get_if<Dispatch>(&admission)) {
      complete(std::move(*reply));
      return;
    }
    auto* slot = server_.room(std::get<RouteToRoom>(admission).room_id);
    net::post(slot->strand, [self = shared_from_this(), slot, msg = std::move(*decoded)]() {
      Dispatch out = slot->service.execute(self->state_, msg, self->server_.now());
      self->server_.deliver(out);
      net::post(self->ws_.get_executor(),
                [self, close = std::move(out.close)]() { self->after(close); });
    });
  }

  void complete(Dispatch out) {
    server_.deliver(out);
    after(out.close);
  }

  void after(const std::vector<SessionId>& close) {
    for (auto id : close) {
      if (id == state_.id) {
        shutdown(true);
        return;
      }
    }
    do_read();
  }

  // Leaves the room (if joined) and closes once queued frames are flushed.
  void shutdown(bool graceful) {
    if (closing_) {
      return;
    }
    closing_ = true;
    server_.remove(state_.id);
    if (state_.in_room()) {
      if (auto* slot = server_.room(state_.room_id)) {
        net::post(slot->strand, [self = shared_from_this(), slot]() {
          self->server_.deliver(slot->service.leave(self->state_, self->server_.now()));
        });
      }
    }
    if (!graceful) {
      drop_pending();
      close_started_ = true;
      return;
    }
    // Frames already posted to this strand are queued before this runs.
    net::post(ws_.get_executor(), [self = shared_from_this()]() {
      if (!self->writing_) {
        self->close_socket();
      }
    });
  }

  void drop_pending() {
    // An in-flight write still references the front frame.
    while (queue_.size() > (writing_ ? 1U : 0U)) {
      queue_.pop_back();
    }
  }

  void close_socket() {
    if (close_started_) {
      return;
    }
    close_started_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

  void enqueue(std::string frame) {
    if (close_started_) {
      return;
    }
    if (queue_.size() >= kMaxQueuedFrames) {
      // Slow consumer: drop the session rather than buffer without bound.
      shutdown(false);
      beast::error_code ignored;
      beast::get_lowest_layer(ws_).socket().close(ignored);
      return;
    }
    queue_.push_back(std::move(frame));
    if (!writing_) {
      do_write();
    }
  }

  void do_write() {
    writing_ = true;
    ws_.async_write(net::buffer(queue_.front()),
                    beast::bind_front_handler(&Connection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      queue_.clear();
      shutdown(false);
      return;
    }
    queue_.pop_front();
    if (!queue_.empty() && !close_started_) {
      do_write();
    } else if (closing_) {
      close_socket();
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  WsServer::Impl& server_;
  beast::flat_buffer buffer_;
  SessionState state_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  bool closing_ = false;
  bool close_started_ = false;
};

}  // namespace

void WsServer::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (!acceptor.is_open()) {
      return;
    }
    if (!ec) {
      std::make_shared<Connection>(std::move(socket), *this)->run();
    }
    do_accept();
  });
}

void WsServer::Impl::schedule_tick(RoomSlot& slot) {
  slot.timer.expires_after(kTickInterval);
  slot.timer.async_wait([this, &slot](beast::error_code ec) {
    if (ec) {
      return;
    }
    deliver(slot.service.tick(now()));
    schedule_tick(slot);
  });
}

void WsServer::Impl::deliver(const Dispatch& out) {
  std::vector<std::pair<std::shared_ptr<Connection>, const std::string*>> targets;
  targets.reserve(out.messages.size());
  {
    std::lock_guard lock(registry_mutex);
    for (const auto& m : out.messages) {
      auto it = registry.find(m.target);
      if (it == registry.end()) {
        continue;
      }
      if (auto conn = it->second.lock()) {
        targets.emplace_back(std::move(conn), &m.frame);
      }
    }
  }
  for (auto& [conn, frame] : targets) {
    conn->send(*frame);
  }
}

WsServer::WsServer(ServerConfig config, EventLog& log, core::Faults faults)
    : impl_(std::make_unique<Impl>(std::move(config), log, faults)) {}

WsServer::~WsServer() { stop(); }

unsigned short WsServer::listen() {
  auto address = parse_listen_address(impl_->config.listen);
  if (!address) {
    throw ConfigInvalid("invalid listen address '" + impl_->config.listen + "'");
  }
  tcp::resolver resolver(impl_->ioc);
  auto results = resolver.resolve(address->host, std::to_string(address->port));
  const tcp::endpoint endpoint = results.begin()->endpoint();
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen(net::socket_base::max_listen_connections);
  impl_->do_accept();
  for (auto& [id, slot] : impl_->rooms) {
    net::post(slot->strand, [this, s = slot.get()]() { impl_->schedule_tick(*s); });
  }
  return impl_->acceptor.local_endpoint().port();
}

void WsServer::run(std::size_t threads) {
  for (std::size_t i = 1; i < threads; ++i) {
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  }
  impl_->ioc.run();
}

void WsServer::start(std::size_t threads) {
  for (std::size_t i = 0; i < std::max<std::size_t>(threads, 1); ++i) {
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  }
}

void WsServer::stop() {
  if (!impl_) {
    return;
  }
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) {
      t.join();
    }
  }
  impl_->threads.clear();
  beast::error_code ignored;
  impl_->acceptor.close(ignored);
}

std::vector<double> WsServer::routing_samples_us(const std::string& room_id) {
  auto* slot = impl_->room(room_id);
  if (slot == nullptr) {
    return {};
  }
  std::promise<std::vector<double>> done;
  auto result = done.get_future();
  net::post(slot->strand, [slot, &done] { done.set_value(slot->service.routing_samples_us()); });
  return result.get();
}

}  // namespace hush::relay
