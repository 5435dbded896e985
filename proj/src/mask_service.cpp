#include "mdvg/mask_service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "mdvg/error.hpp"

namespace mdvg {

using nlohmann::json;

namespace {

std::string error_reply(std::string_view code) { return json{{"error", code}}.dump(); }
std::string error_reply(ErrorCode code) { return error_reply(to_string(code)); }

}  // namespace

SessionService::SessionService(std::shared_ptr<const Vocab> vocab, MarkerConfig cfg)
    : vocab_(std::move(vocab)), cfg_(std::move(cfg)) {
  cfg_.validate();
}

std::shared_ptr<SessionService::Slot> SessionService::find(std::int64_t id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t SessionService::open_sessions() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::string SessionService::handle(std::string_view request) {
  json req;
  try {
    req = json::parse(request);
  } catch (const json::exception&) {
    return error_reply(ErrorCode::BadRequest);
  }
  if (!req.is_object() || !req.contains("op") || !req["op"].is_string()) return error_reply(ErrorCode::BadRequest);
  const std::string op = req["op"].get<std::string>();

  try {
    if (op == "info") return json{{"vocab_size", vocab_->size()}, {"digest", vocab_->digest()}}.dump();

    if (op == "open") {
      if (!req.contains("target") || !req["target"].is_string()) return error_reply(ErrorCode::BadRequest);
      std::string prefix;
      if (auto it = req.find("prefix"); it != req.end()) {
        if (!it->is_string()) return error_reply(ErrorCode::BadRequest);
        prefix = it->get<std::string>();
      }
      MarkerConfig cfg = cfg_;
      if (auto it = req.find("pad"); it != req.end()) {
        if (!it->is_boolean()) return error_reply(ErrorCode::BadRequest);
        cfg.pad_with_space = it->get<bool>();
      }
      const std::size_t prefix_len = prefix.size();
      auto slot = std::make_shared<Slot>(Session(prefix + req["target"].get<std::string>(), cfg, prefix_len));
      std::lock_guard lock(mu_);
      const std::int64_t id = next_id_++;
      sessions_.emplace(id, std::move(slot));
      return json{{"session", id}}.dump();
    }

    if (op != "mask" && op != "advance" && op != "close" && op != "decoded") return error_reply(ErrorCode::BadRequest);
    if (!req.contains("session") || !req["session"].is_number_integer()) return error_reply(ErrorCode::BadRequest);
    const auto id = req["session"].get<std::int64_t>();

    if (op == "close") {
      std::lock_guard lock(mu_);
      if (sessions_.erase(id) == 0) return error_reply(ErrorCode::UnknownSession);
      return json{{"ok", true}}.dump();
    }

    auto slot = find(id);
    if (!slot) return error_reply(ErrorCode::UnknownSession);
    std::lock_guard lock(slot->mu);
    if (op == "mask") return json{{"allowed", slot->session.allowed_tokens(*vocab_).allowed}}.dump();
    if (op == "decoded")
      return json{{"decoded", slot->session.decoded_string()}, {"done", slot->session.done()}}.dump();
    // advance
    if (!req.contains("token") || !req["token"].is_number_integer()) return error_reply(ErrorCode::BadRequest);
    slot->session.advance(req["token"].get<TokenId>(), *vocab_);
    return json{{"ok", true}, {"done", slot->session.done()}}.dump();
  } catch (const Error& e) {
    return error_reply(e.code());
  }
}

void SessionService::serve(std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << handle(line) << '\n' << std::flush;
  }
}

// ---------------------------------------------------------------------------

TcpSessionServer::TcpSessionServer(SessionService& service, std::uint16_t port) : service_(service) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::IoError, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::IoError, "cannot listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpSessionServer::~TcpSessionServer() {
  stop();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers)
    if (t.joinable()) t.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpSessionServer::run() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      continue;
    }
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { handle_connection(fd); });
  }
}

void TcpSessionServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  std::lock_guard lock(mu_);
  for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
}

void TcpSessionServer::handle_connection(int fd) {
  std::string buffer;
  char chunk[4096];
  auto send_all = [fd](const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  };
  while (true) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    bool ok = true;
    while (ok && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      ok = send_all(service_.handle(line) + "\n");
    }
    if (!ok) break;
  }
  std::lock_guard lock(mu_);
  std::erase(client_fds_, fd);
  ::close(fd);
}

}  // namespace mdvg
