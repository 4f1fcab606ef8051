#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "harness/config.hpp"

namespace wtt::harness {

struct ServerOptions {
  int port = 0;                 // 0 picks a free port
  std::string host = "127.0.0.1";
  std::int64_t max_frames = 0;  // published frames before returning; 0 runs until stop()
  double fps = 0.0;             // overrides serve.fps when > 0
};

// Single-threaded session server speaking newline-delimited JSON over TCP.
// The simulation loop owns all state; commands queue up and apply between
// steps, frames fan out to every client.
class Server {
 public:
  Server(const ScenarioConfig& cfg, const ServerOptions& opt);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const;
  // Blocks until stop() or max_frames.
  void run();
  // Safe from any thread.
  void stop();
  std::int64_t frames_published() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wtt::harness
