#include "tecorridor/server.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace tecorridor::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

http::status status_for(const json& reply) {
  if (reply.value("type", "") != "error") return http::status::ok;
  const auto code = reply.value("code", "");
  if (code == "not_found") return http::status::not_found;
  if (code == "conflict" || code == "finished") return http::status::conflict;
  if (code == "timeout") return http::status::request_timeout;
  return http::status::bad_request;
}

const char* mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  return "application/octet-stream";
}

/// Resolves a request target under `root`, refusing anything that escapes it.
std::optional<std::filesystem::path> static_path(const std::filesystem::path& root,
                                                 std::string_view target) {
  if (const auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
  std::string rel(target);
  if (rel.empty() || rel.front() != '/') return std::nullopt;
  if (rel.back() == '/') rel += "index.html";
  const std::filesystem::path p = std::filesystem::path(rel.substr(1)).lexically_normal();
  if (p.empty() || p.is_absolute() || *p.begin() == "..") return std::nullopt;
  return root / p;
}

}  // namespace

class WsSession;

struct Server::Impl {
  GameService& service;
  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  net::steady_timer timer{ioc};
  std::optional<net::signal_set> signals;
  std::map<std::string, std::set<std::weak_ptr<WsSession>, std::owner_less<>>> subscribers;

  Impl(GameService& s, ServerOptions o) : service(s), options(std::move(o)) {}

  void accept();
  void schedule_tick();
  void subscribe(const std::string& session_id, const std::shared_ptr<WsSession>& ws) {
    subscribers[session_id].insert(ws);
  }
  void publish(const std::string& session_id, const std::string& text);
  http::response<http::string_body> respond(const http::request<http::string_body>& req);
};

// ---------------------------------------------------------------------------
// WebSocket connection

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> req) {
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->read();
    });
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write_next();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->on_message(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void on_message(const std::string& text) {
    json reply;
    try {
      const json request = json::parse(text);
      reply = server_.service.handle(request);
      std::string sid;
      if (reply.contains("session_id") && reply["session_id"].is_string()) {
        sid = reply["session_id"].get<std::string>();
      } else if (request.is_object() && request.contains("session_id") && request["session_id"].is_string()) {
        sid = request["session_id"].get<std::string>();
      }
      if (!sid.empty() && reply.value("type", "") != "error") server_.subscribe(sid, shared_from_this());
      if (reply.value("code", "") == "timeout" && !sid.empty()) server_.subscribe(sid, shared_from_this());
    } catch (const json::exception& e) {
      reply = error_json("bad_request", std::string("malformed JSON: ") + e.what());
    }
    send(reply.dump());
  }

  void write_next() {
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return;
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write_next();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  Server::Impl& server_;
};

void Server::Impl::publish(const std::string& session_id, const std::string& text) {
  auto it = subscribers.find(session_id);
  if (it == subscribers.end()) return;
  for (auto w = it->second.begin(); w != it->second.end();) {
    if (auto ws = w->lock()) {
      ws->send(text);
      ++w;
    } else {
      w = it->second.erase(w);
    }
  }
}

// ---------------------------------------------------------------------------
// HTTP connection

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return;
                       self->on_request();
                     });
  }

  void on_request() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(req_));
      }
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(server_.respond(req_));
    const bool keep = res->keep_alive();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res, keep](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (keep) {
                          self->read();
                        } else {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                        }
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Server::Impl& server_;
};

http::response<http::string_body> Server::Impl::respond(const http::request<http::string_body>& req) {
  http::response<http::string_body> res;
  res.version(req.version());
  res.keep_alive(req.keep_alive());
  res.set(http::field::server, "tecorridor");
  auto reply_json = [&](http::status st, const json& body) {
    res.result(st);
    res.set(http::field::content_type, "application/json");
    res.body() = body.dump();
  };

  std::string target(req.target());
  if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);

  if (target.rfind("/api/", 0) == 0) {
    const std::string route = target.substr(5);
    if (route == "slots" && req.method() == http::verb::get) {
      reply_json(http::status::ok, {{"type", "slots"}, {"slots", service.opponent_slots()}});
    } else if (route == "health" && req.method() == http::verb::get) {
      reply_json(http::status::ok, {{"ok", true}});
    } else if ((route == "create" || route == "act" || route == "report") &&
               req.method() == http::verb::post) {
      json request;
      try {
        request = req.body().empty() ? json::object() : json::parse(req.body());
      } catch (const json::exception& e) {
        reply_json(http::status::bad_request, error_json("bad_request", std::string("malformed JSON: ") + e.what()));
        res.prepare_payload();
        return res;
      }
      if (!request.is_object()) request = json::object();
      request["type"] = route;
      const json reply = service.handle(request);
      if (reply.value("code", "") == "timeout") {
        for (const auto& t : reply["forced_turns"]) publish(t.value("session_id", ""), t.dump());
      }
      reply_json(status_for(reply), reply);
    } else {
      reply_json(http::status::not_found, error_json("not_found", "no route " + target));
    }
  } else if (options.static_dir && (req.method() == http::verb::get || req.method() == http::verb::head)) {
    auto path = static_path(*options.static_dir, target);
    std::ifstream in;
    if (path && std::filesystem::is_regular_file(*path)) in.open(*path, std::ios::binary);
    if (in.is_open() && in) {
      std::ostringstream body;
      body << in.rdbuf();
      res.result(http::status::ok);
      res.set(http::field::content_type, mime_type(*path));
      res.body() = body.str();
    } else {
      res.result(http::status::not_found);
      res.set(http::field::content_type, "text/plain");
      res.body() = "not found\n";
    }
  } else {
    res.result(http::status::not_found);
    res.set(http::field::content_type, "text/plain");
    res.body() = "not found\n";
  }
  res.prepare_payload();
  return res;
}

// ---------------------------------------------------------------------------
// Server

void Server::Impl::accept() {
  acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
    if (ec == net::error::operation_aborted) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), *this)->run();
    accept();
  });
}

void Server::Impl::schedule_tick() {
  timer.expires_after(std::chrono::milliseconds(options.tick_ms));
  timer.async_wait([this](beast::error_code ec) {
    if (ec) return;
    for (const auto& t : service.tick_all()) publish(t.session_id, to_json(t).dump());
    schedule_tick();
  });
}

Server::Server(GameService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  if (impl_->options.tick_ms <= 0) throw std::invalid_argument("tick_ms must be > 0");
  const tcp::endpoint ep{net::ip::make_address(impl_->options.address), impl_->options.port};
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen(net::socket_base::max_listen_connections);
  if (impl_->options.handle_signals) {
    impl_->signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    impl_->signals->async_wait([this](beast::error_code, int) { stop(); });
  }
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->accept();
  impl_->schedule_tick();
  impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

}  // namespace tecorridor::service
