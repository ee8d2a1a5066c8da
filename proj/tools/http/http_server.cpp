#include "http_server.hpp"

#include <httplib.h>

namespace dmriqc {

HttpServer::HttpServer(QcApi &api) : api_(api), server_(std::make_unique<httplib::Server>()) {
  auto route = [this](const httplib::Request &req, httplib::Response &res) {
    std::map<std::string, std::string> query;
    // First occurrence wins for repeated keys.
    for (const auto &[k, v] : req.params) query.emplace(k, v);
    std::optional<std::string_view> auth;
    std::string auth_value;
    if (req.has_header("Authorization")) {
      auth_value = req.get_header_value("Authorization");
      auth = auth_value;
    }
    auto r = api_.handle(req.method, req.path, query, req.body, auth);
    res.status = r.status;
    for (const auto &[k, v] : r.headers) res.set_header(k, v);
    if (r.status != 204) res.set_content(r.body, r.content_type);
  };
  // The library default adds SO_REUSEPORT, which lets a second server share
  // a port that is already taken. Keep only SO_REUSEADDR.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char *>(&yes), sizeof(yes));
  });
  const std::string any = ".*";
  server_->Get(any, route);
  server_->Post(any, route);
  server_->Put(any, route);
  server_->Patch(any, route);
  server_->Delete(any, route);
  server_->Options(any, route);
}

HttpServer::~HttpServer() = default;

auto HttpServer::bind(const std::string &host, int port) -> int {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

auto HttpServer::serve() -> bool { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

} // namespace dmriqc
