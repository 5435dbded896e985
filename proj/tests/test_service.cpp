#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <sstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "mdvg/mask_service.hpp"
#include "oracles/engine_oracle.hpp"
#include "support.hpp"

using namespace mdvg;
using nlohmann::json;

namespace {

std::shared_ptr<const Vocab> toy() {
  return std::make_shared<const Vocab>(Vocab::load(support::fixture("toy_vocab.json")));
}

int connect_to(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  return fd;
}

std::string exchange(int fd, const std::string& lines, std::size_t expect_lines) {
  REQUIRE(::send(fd, lines.data(), lines.size(), 0) == static_cast<ssize_t>(lines.size()));
  std::string got;
  char buf[4096];
  while (static_cast<std::size_t>(std::count(got.begin(), got.end(), '\n')) < expect_lines) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    REQUIRE(n > 0);
    got.append(buf, static_cast<std::size_t>(n));
  }
  return got;
}

}  // namespace

TEST_CASE("scripted transcript") {
  auto vocab = toy();
  SessionService service(vocab, MarkerConfig{});
  std::istringstream script(support::slurp(support::fixture("service_transcript.jsonl")));
  std::string line;
  int n = 0;
  while (std::getline(script, line)) {
    const json row = json::parse(line);
    json want = row["response"];
    const json got = json::parse(service.handle(row["request"].dump()));
    if (want.contains("digest")) want["digest"] = vocab->digest();
    CHECK_MESSAGE(got == want, "line " << n + 1 << ": " << got.dump());
    ++n;
  }
  CHECK(n == 31);
  CHECK(service.open_sessions() == 1);
}

TEST_CASE("transcript masks agree with the oracle") {
  auto vocab = toy();
  const auto forms = oracle::annotated_forms("a b", MarkerConfig{});
  SessionService service(vocab, MarkerConfig{});
  const auto id = json::parse(service.handle(R"({"op":"open","target":"a b"})"))["session"].get<int>();
  std::string emitted;
  for (TokenId t : {3, 9, 6, 2, 1}) {
    const auto allowed = json::parse(service.handle(json{{"op", "mask"}, {"session", id}}.dump()))["allowed"];
    CHECK(allowed.get<std::vector<TokenId>>() == oracle::oracle_mask(forms, emitted, *vocab));
    service.handle(json{{"op", "advance"}, {"session", id}, {"token", t}}.dump());
    emitted += *vocab->bytes(t);
  }
}

TEST_CASE("malformed lines keep the stream alive") {
  SessionService service(toy(), MarkerConfig{});
  std::istringstream in("not json\n\n{\"op\":\"info\"}\n[1,2]\n{\"op\":\"open\",\"target\":\"a\"}\n");
  std::ostringstream out;
  service.serve(in, out);
  std::istringstream replies(out.str());
  std::vector<std::string> lines;
  for (std::string l; std::getline(replies, l);) lines.push_back(l);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == R"({"error":"BadRequest"})");
  CHECK(json::parse(lines[1]).contains("digest"));
  CHECK(lines[2] == R"({"error":"BadRequest"})");
  CHECK(lines[3] == R"({"session":1})");
}

TEST_CASE("tcp connections share sessions") {
  SessionService service(toy(), MarkerConfig{});
  TcpSessionServer server(service, 0);
  REQUIRE(server.port() != 0);
  std::thread runner([&] { server.run(); });

  const int a = connect_to(server.port());
  const int b = connect_to(server.port());
  CHECK(exchange(a, "{\"op\":\"open\",\"target\":\"ab\"}\n{\"op\":\"mask\",\"session\":1}\n", 2) ==
        "{\"session\":1}\n{\"allowed\":[0,3,7]}\n");
  CHECK(exchange(b, "garbage\n{\"op\":\"advance\",\"session\":1,\"token\":7}\n", 2) ==
        "{\"error\":\"BadRequest\"}\n{\"done\":false,\"ok\":true}\n");
  CHECK(exchange(a, "{\"op\":\"mask\",\"session\":1}\n", 1) == "{\"allowed\":[11]}\n");

  // many clients driving their own sessions in parallel
  std::vector<std::thread> clients;
  std::atomic<int> finished{0};
  for (int c = 0; c < 8; ++c) {
    clients.emplace_back([&] {
      const int fd = connect_to(server.port());
      const std::string opened = exchange(fd, "{\"op\":\"open\",\"target\":\"a a\"}\n", 1);
      const auto id = json::parse(opened)["session"].get<int>();
      std::string req;
      for (int t : {0, 2, 0, 11}) req += json{{"op", "advance"}, {"session", id}, {"token", t}}.dump() + "\n";
      const std::string replies = exchange(fd, req, 4);
      if (replies.ends_with("{\"done\":true,\"ok\":true}\n")) ++finished;
      ::close(fd);
    });
  }
  for (auto& t : clients) t.join();
  CHECK(finished == 8);

  ::close(a);
  ::close(b);
  server.stop();
  runner.join();
}
