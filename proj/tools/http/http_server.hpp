#pragma once

#include "dmriqc/service.hpp"

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace dmriqc {

/// Thin cpp-httplib adapter over QcApi. Every method and path is routed to
/// QcApi::handle so status codes (404, 405) stay in one place.
class HttpServer {
public:
  explicit HttpServer(QcApi &api);
  ~HttpServer();
  HttpServer(const HttpServer &) = delete;
  auto operator=(const HttpServer &) -> HttpServer & = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  auto bind(const std::string &host, int port) -> int;
  /// Blocks until stop().
  auto serve() -> bool;
  void stop();
  void wait_until_ready() const;

private:
  QcApi &api_;
  std::unique_ptr<httplib::Server> server_;
};

} // namespace dmriqc
