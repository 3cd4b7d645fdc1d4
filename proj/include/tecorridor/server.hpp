#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "tecorridor/game_service.hpp"

namespace tecorridor::service {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  ///< 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
  int tick_ms = 100;
  bool handle_signals = false;  ///< stop on SIGINT/SIGTERM
};

/// HTTP + WebSocket front end for a GameService on a single port.
///
///   GET  /api/slots                  opponent slot names
///   POST /api/create|act|report      JSON body, same fields as the socket messages
///   GET  /ws                         WebSocket; one JSON message per frame
///   GET  /<path>                     static files (when static_dir is set)
///
/// Forced turns are pushed to every socket that created or acted on the session.
class Server {
 public:
  Server(GameService& service, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bound port (useful when options.port was 0).
  unsigned short port() const;
  /// Serves until stop(); runs on the calling thread.
  void run();
  /// Thread-safe.
  void stop();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace tecorridor::service
