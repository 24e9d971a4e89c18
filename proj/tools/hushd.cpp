// Relay server: serves the statically configured rooms over WebSocket.

#include <pthread.h>
#include <signal.h>

#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "hush/relay/config.hpp"
#include "hush/relay/ws_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hushd - selective voice relay server"};
  std::optional<std::string> listen;
  std::optional<std::string> config_path;
  std::optional<std::string> log_level;
  std::size_t threads = std::max(1U, std::thread::hardware_concurrency());
  app.add_option("--listen", listen, "Listen address, host:port (overrides the config file)");
  app.add_option("--config", config_path, "YAML config file; defaults apply when omitted");
  app.add_option("--log-level", log_level, "debug, info, warn, error or off");
  app.add_option("--threads", threads, "I/O threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  hush::relay::ServerConfig config;
  try {
    config = hush::relay::load_config(config_path ? std::optional<std::filesystem::path>(*config_path)
                                                  : std::nullopt);
    if (listen) {
      if (!hush::relay::parse_listen_address(*listen)) {
        throw hush::relay::ConfigInvalid("--listen must look like host:port");
      }
      config.listen = *listen;
    }
    if (log_level) {
      auto level = hush::relay::parse_log_level(*log_level);
      if (!level) {
        throw hush::relay::ConfigInvalid("--log-level must be one of debug, info, warn, error, off");
      }
      config.log_level = *level;
    }
  } catch (const hush::relay::ConfigInvalid& e) {
    std::cerr << "hushd: " << e.what() << '\n';
    return 2;
  }

  // Worker threads inherit the mask; the main thread waits for the signal.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto log = hush::relay::EventLog::to_stdout(config.log_level);
  hush::relay::WsServer server(config, log);
  unsigned short port = 0;
  try {
    port = server.listen();
  } catch (const std::exception& e) {
    std::cerr << "hushd: cannot listen on " << config.listen << ": " << e.what() << '\n';
    return 1;
  }
  std::cerr << "hushd: listening on port " << port << " with " << config.rooms.size() << " room(s)\n";

  server.start(threads);
  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  return 0;
}
