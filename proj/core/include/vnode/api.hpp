#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "vnode/error.hpp"
#include "vnode/node.hpp"

namespace httplib {
class Server;
}

namespace vnode {

/// HTTP status used for an error code in the {"error","message"} envelope.
int http_status(Errc code);

/// JSON-over-HTTP facade for a node; every route lives under /api/v1.
class ApiServer {
 public:
  explicit ApiServer(Node& node);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Port 0 binds an ephemeral port. Returns the bound port; throws
  /// bind_failure.
  std::uint16_t bind(const std::string& host, std::uint16_t port);
  /// Serves until stop(); requires bind().
  void run();
  void stop();

 private:
  void install_routes();

  Node& node_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace vnode
