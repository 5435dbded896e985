#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mdvg/constraint.hpp"

namespace mdvg {

// Newline-delimited JSON front end for constraint sessions.
//
//   {"op":"open","target":s[,"prefix":s][,"pad":b]} -> {"session":id}
//   {"op":"mask","session":id}                       -> {"allowed":[ids]}
//   {"op":"advance","session":id,"token":id}         -> {"ok":true,"done":b}
//   {"op":"decoded","session":id}                    -> {"decoded":s,"done":b}
//   {"op":"close","session":id}                      -> {"ok":true}
//   {"op":"info"}                                    -> {"vocab_size":n,"digest":s}
//
// Failures answer {"error":code}. "prefix" is emitted content that never
// receives markers (the speaker prefix); the session target is prefix + target.
// Thread-safe: sessions may be driven from several connections, each session
// is serialized by its own lock.
class SessionService {
 public:
  SessionService(std::shared_ptr<const Vocab> vocab, MarkerConfig cfg);

  std::string handle(std::string_view request);

  // Answers one line per request line until EOF.
  void serve(std::istream& in, std::ostream& out);

  std::size_t open_sessions() const;

 private:
  struct Slot {
    explicit Slot(Session s) : session(std::move(s)) {}
    std::mutex mu;
    Session session;
  };

  std::shared_ptr<Slot> find(std::int64_t id) const;

  std::shared_ptr<const Vocab> vocab_;
  MarkerConfig cfg_;
  mutable std::mutex mu_;
  std::map<std::int64_t, std::shared_ptr<Slot>> sessions_;
  std::int64_t next_id_ = 1;
};

// Line protocol over TCP on 127.0.0.1, one thread per connection.
class TcpSessionServer {
 public:
  // Port 0 picks a free port; see port().
  TcpSessionServer(SessionService& service, std::uint16_t port);
  ~TcpSessionServer();
  TcpSessionServer(const TcpSessionServer&) = delete;
  TcpSessionServer& operator=(const TcpSessionServer&) = delete;

  std::uint16_t port() const { return port_; }

  // Accepts connections until stop().
  void run();
  void stop();

 private:
  void handle_connection(int fd);

  SessionService& service_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

}  // namespace mdvg
