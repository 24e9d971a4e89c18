#include "hush/sim/runner.hpp"

#include <map>
#include <memory>
#include <thread>

#include "hush/sim/live_client.hpp"
#include "hush/wire/codec.hpp"

namespace hush::sim {

namespace {

using relay::Millis;

// Frames received by each actor (by index) since the last settle, plus the
// actors whose sessions the server closed.
struct Inbox {
  std::vector<std::vector<std::string>> frames;
  std::vector<bool> closed_by_server;

  explicit Inbox(std::size_t actors) : frames(actors), closed_by_server(actors, false) {}
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void open(std::size_t actor) = 0;
  virtual void send(std::size_t actor, const wire::ClientMessage& msg) = 0;
  virtual void close(std::size_t actor) = 0;
  virtual void advance(Millis t) = 0;
  /// Waits until everything caused so far has been delivered, then drains.
  virtual Inbox settle(std::optional<std::size_t> acting) = 0;
  virtual void after_step(std::size_t /*step*/) {}
};

class InProcessTransport final : public Transport {
 public:
  InProcessTransport(const Scenario& scenario, const InProcess& mode)
      : relay_(config_for(scenario), mode.faults),
        after_step_(mode.after_step),
        sessions_(scenario.actors.size()),
        inbox_(scenario.actors.size()) {}

  void open(std::size_t actor) override { sessions_[actor] = relay_.connect(now_); }

  void send(std::size_t actor, const wire::ClientMessage& msg) override {
    if (sessions_[actor]) {
      route(relay_.handle_message(*sessions_[actor], msg, now_));
    }
  }

  void close(std::size_t actor) override {
    if (sessions_[actor]) {
      auto out = relay_.on_disconnect(*sessions_[actor], now_);
      sessions_[actor].reset();
      route(std::move(out));
    }
  }

  void advance(Millis t) override {
    now_ = t;
    route(relay_.tick(now_));
  }

  Inbox settle(std::optional<std::size_t>) override {
    Inbox out(sessions_.size());
    std::swap(out, inbox_);
    return out;
  }

  void after_step(std::size_t step) override {
    if (after_step_) {
      after_step_(StepView{step, relay_, sessions_});
    }
  }

 private:
  static relay::ServerConfig config_for(const Scenario& scenario) {
    relay::ServerConfig config;
    config.rooms = {relay::RoomSpec{scenario.room_id, scenario.config}};
    return config;
  }

  std::optional<std::size_t> actor_of(relay::SessionId id) const {
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      if (sessions_[i] == id) {
        return i;
      }
    }
    return std::nullopt;
  }

  void route(relay::Dispatch out) {
    for (auto& m : out.messages) {
      if (auto actor = actor_of(m.target)) {
        inbox_.frames[*actor].push_back(std::move(m.frame));
      }
    }
    for (auto id : out.close) {
      if (auto actor = actor_of(id)) {
        inbox_.closed_by_server[*actor] = true;
        sessions_[*actor].reset();
      }
    }
  }

  relay::Relay relay_;
  std::function<void(const StepView&)> after_step_;
  std::vector<std::optional<relay::SessionId>> sessions_;
  Inbox inbox_;
  Millis now_{0};
};

/// Drives a real server. After each action it pings the acting session
/// (proving the action was executed), then every other session (proving
/// all deliveries to it were flushed). Sessions that went away are first
/// awaited as USER_LEFT by the remaining members.
class LiveTransport final : public Transport {
 public:
  LiveTransport(const Scenario& scenario, const Live& mode)
      : mode_(mode), clients_(scenario.actors.size()), user_ids_(scenario.actors.size()),
        inbox_(scenario.actors.size()), started_(std::chrono::steady_clock::now()) {}

  void open(std::size_t actor) override {
    clients_[actor] = std::make_unique<LiveClient>(mode_.host, mode_.port, mode_.timeout);
    user_ids_[actor].reset();
  }

  void send(std::size_t actor, const wire::ClientMessage& msg) override {
    if (clients_[actor] && clients_[actor]->is_open()) {
      clients_[actor]->send(msg);
    }
  }

  void close(std::size_t actor) override {
    if (clients_[actor]) {
      clients_[actor]->close();
      clients_[actor].reset();
      departed(actor);
    }
  }

  void advance(Millis t) override {
    if (mode_.pace) {
      std::this_thread::sleep_until(started_ + t);
    }
  }

  Inbox settle(std::optional<std::size_t> acting) override {
    if (acting && connected(*acting)) {
      sync(*acting);
    }
    await_departures();
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      if ((!acting || i != *acting) && connected(i)) {
        sync(i);
      }
    }
    await_departures();
    Inbox out(clients_.size());
    std::swap(out, inbox_);
    return out;
  }

 private:
  bool connected(std::size_t actor) const { return clients_[actor] && clients_[actor]->is_open(); }

  void departed(std::size_t actor) {
    if (user_ids_[actor]) {
      pending_departures_.push_back(*user_ids_[actor]);
      user_ids_[actor].reset();
    }
  }

  // Reads frames until `stop` matches one; handles a server-side close.
  template <typename Stop>
  void read_until(std::size_t actor, Stop stop) {
    while (connected(actor)) {
      auto frame = clients_[actor]->receive();
      if (!frame) {
        inbox_.closed_by_server[actor] = true;
        clients_[actor].reset();
        departed(actor);
        return;
      }
      auto parsed = nlohmann::json::parse(*frame, nullptr, false);
      const bool is_pong = parsed.is_object() && parsed.value("type", "") == "PONG";
      if (parsed.is_object() && parsed.value("type", "") == "WELCOME" && parsed["user_id"].is_string()) {
        user_ids_[actor] = parsed["user_id"].get<std::string>();
      }
      if (!is_pong) {
        inbox_.frames[actor].push_back(*frame);
      }
      if (stop(parsed)) {
        return;
      }
    }
  }

  void sync(std::size_t actor) {
    const std::int64_t nonce = next_nonce_++;
    clients_[actor]->send(wire::Ping{nonce});
    read_until(actor, [nonce](const nlohmann::json& j) {
      return j.is_object() && j.value("type", "") == "PONG" && j.value("nonce", std::int64_t{-1}) == nonce;
    });
  }

  void await_departures() {
    while (!pending_departures_.empty()) {
      const std::string gone = pending_departures_.back();
      pending_departures_.pop_back();
      for (std::size_t i = 0; i < clients_.size(); ++i) {
        if (connected(i) && user_ids_[i]) {
          read_until(i, [&gone](const nlohmann::json& j) {
            return j.is_object() && j.value("type", "") == "USER_LEFT" && j.value("user_id", "") == gone;
          });
        }
      }
    }
  }

  Live mode_;
  std::vector<std::unique_ptr<LiveClient>> clients_;
  std::vector<std::optional<std::string>> user_ids_;
  std::vector<std::string> pending_departures_;
  Inbox inbox_;
  std::chrono::steady_clock::time_point started_;
  std::int64_t next_nonce_ = 1'000'000'000;
};

class Executor {
 public:
  Executor(const Scenario& scenario, Transport& transport, std::function<bool(const ScriptAction&)> skip)
      : scenario_(scenario), transport_(transport), skip_(std::move(skip)),
        connected_(scenario.actors.size(), false), next_seq_(scenario.actors.size(), 1) {
    transcript_.seed = scenario.seed;
  }

  Transcript run() {
    std::int64_t last_t = 0;
    for (std::size_t step = 0; step < scenario_.actions.size(); ++step) {
      const auto& action = scenario_.actions[step];
      last_t = action.t_ms;
      transport_.advance(Millis{action.t_ms});
      collect(step, action.t_ms, std::nullopt, transport_.settle(std::nullopt));
      const std::size_t actor = scenario_.actor_index(action.actor);
      if (!skip_ || !skip_(action)) {
        perform(actor, action.op);
      }
      collect(step, action.t_ms, actor, transport_.settle(actor));
      transport_.after_step(step);
    }
    // Let any coalesced broadcasts fall due.
    const std::int64_t final_t = last_t + 1000;
    const std::size_t final_step = scenario_.actions.size();
    transport_.advance(Millis{final_t});
    collect(final_step, final_t, std::nullopt, transport_.settle(std::nullopt));
    transport_.after_step(final_step);
    return std::move(transcript_);
  }

 private:
  void ensure_connected(std::size_t actor) {
    if (connected_[actor]) {
      return;
    }
    transport_.open(actor);
    connected_[actor] = true;
    next_seq_[actor] = 1;
    transport_.send(actor, wire::Hello{wire::kProtocolVersion, scenario_.actors[actor]});
  }

  void perform(std::size_t actor, const Op& op) {
    if (std::holds_alternative<DisconnectOp>(op)) {
      if (connected_[actor]) {
        transport_.close(actor);
        connected_[actor] = false;
      }
      return;
    }
    ensure_connected(actor);
    if (std::holds_alternative<JoinRoomOp>(op)) {
      transport_.send(actor, wire::JoinRoom{scenario_.room_id});
    } else if (const auto* move = std::get_if<MoveOp>(&op)) {
      transport_.send(actor, wire::Move{move->x, move->y});
    } else if (const auto* speak = std::get_if<SpeakOp>(&op)) {
      transport_.send(actor, wire::Speak{next_seq_[actor]++, speak->text});
    } else if (const auto* enter = std::get_if<EnterOp>(&op)) {
      transport_.send(actor, wire::EnterChannel{enter->channel});
    } else if (std::holds_alternative<ExitOp>(op)) {
      transport_.send(actor, wire::ExitChannel{});
    }
  }

  std::string name_of(const std::string& user_id) const {
    auto it = names_.find(user_id);
    return it == names_.end() ? user_id : it->second;
  }

  std::string attribute(const nlohmann::json& frame, const std::string& kind,
                        const std::optional<std::size_t>& acting, const std::string& recipient) const {
    if (kind == "AUDIO") {
      return name_of(frame.value("speaker_id", ""));
    }
    if (kind == "USER_MOVED" || kind == "USER_JOINED" || kind == "USER_LEFT") {
      return name_of(frame.value("user_id", ""));
    }
    return acting ? scenario_.actors[*acting] : recipient;
  }

  void collect(std::size_t step, std::int64_t t, std::optional<std::size_t> acting, Inbox inbox) {
    // Learn new user ids first so announcements to earlier actors resolve.
    for (std::size_t actor = 0; actor < inbox.frames.size(); ++actor) {
      for (const auto& frame : inbox.frames[actor]) {
        auto parsed = nlohmann::json::parse(frame, nullptr, false);
        if (parsed.is_object() && parsed.value("type", "") == "WELCOME" && parsed["user_id"].is_string()) {
          names_[parsed["user_id"].get<std::string>()] = scenario_.actors[actor];
        }
      }
    }
    for (std::size_t actor = 0; actor < inbox.frames.size(); ++actor) {
      const std::string& to = scenario_.actors[actor];
      for (auto& frame : inbox.frames[actor]) {
        auto parsed = nlohmann::json::parse(frame, nullptr, false);
        std::string kind = "INVALID";
        if (parsed.is_object() && parsed.contains("type") && parsed["type"].is_string()) {
          kind = parsed["type"].get<std::string>();
        }
        std::string from = kind == "INVALID" ? to : attribute(parsed, kind, acting, to);
        transcript_.records.push_back(DeliveryRecord{step, t, std::move(kind), std::move(from), to, std::move(frame)});
      }
      if (inbox.closed_by_server[actor]) {
        connected_[actor] = false;
        transcript_.records.push_back(DeliveryRecord{step, t, "CLOSE", to, to, ""});
      }
    }
  }

  const Scenario& scenario_;
  Transport& transport_;
  std::function<bool(const ScriptAction&)> skip_;
  std::vector<bool> connected_;
  std::vector<std::int64_t> next_seq_;
  std::map<std::string, std::string> names_;
  Transcript transcript_;
};

}  // namespace

Transcript run_scenario(const Scenario& scenario, const RunMode& mode) {
  validate(scenario);
  if (const auto* in_process = std::get_if<InProcess>(&mode)) {
    InProcessTransport transport(scenario, *in_process);
    return Executor(scenario, transport, in_process->skip).run();
  }
  LiveTransport transport(scenario, std::get<Live>(mode));
  return Executor(scenario, transport, nullptr).run();
}

}  // namespace hush::sim
