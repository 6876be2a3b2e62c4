#pragma once
// Live operator session over WebSocket. One tick thread owns the mission;
// the network thread only parses frames into the ingress queue and writes
// what the tick thread hands it. A second concurrent client is refused.

#include "swarmctl/scenario.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace swarmctl {

struct ServeOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;     // 0 picks a free port
  double speed = 1.0;             // ticks per wall-clock second; <= 0 runs unpaced
  std::optional<Tick> max_ticks;  // stop after this many ticks
  std::ostream* log_stream = nullptr;
};

class Server {
 public:
  /// Binds immediately; throws std::system_error if the port is taken.
  Server(Scenario scenario, std::uint64_t seed, ServeOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  /// Runs the tick loop on the calling thread until stop() or max_ticks.
  void run();
  /// Thread-safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace swarmctl
