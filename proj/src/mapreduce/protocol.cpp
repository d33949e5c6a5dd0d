#include "seizure/mapreduce/protocol.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <thread>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include "seizure/error.hpp"

namespace seizure::mr {

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 8> kTypeNames{{
    {MessageType::Register, "REGISTER"},
    {MessageType::Assign, "ASSIGN"},
    {MessageType::Result, "RESULT"},
    {MessageType::Failed, "FAILED"},
    {MessageType::Heartbeat, "HEARTBEAT"},
    {MessageType::Shutdown, "SHUTDOWN"},
    {MessageType::Submit, "SUBMIT"},
    {MessageType::Done, "DONE"},
}};

std::string clean(std::string_view field) {
  std::string out(field.empty() ? "-" : field);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

std::string_view to_string(MessageType type) noexcept {
  for (const auto& [t, name] : kTypeNames) {
    if (t == type) return name;
  }
  return "HEARTBEAT";
}

std::string format_message(const Message& msg) {
  std::string out(to_string(msg.type));
  out += '\t';
  out += clean(msg.task_id);
  out += '\t';
  out += std::to_string(msg.attempt);
  out += '\t';
  out += clean(msg.payload_path);
  out += '\n';
  return out;
}

Message parse_message(std::string_view line) {
  std::array<std::string_view, 4> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t tab = line.find('\t', start);
    if (i < 3) {
      if (tab == std::string_view::npos) throw ParseError(1, "message needs 4 tab-separated fields");
      fields[i] = line.substr(start, tab - start);
      start = tab + 1;
    } else {
      if (tab != std::string_view::npos) throw ParseError(1, "message has more than 4 fields");
      fields[i] = line.substr(start);
    }
  }
  Message msg;
  bool known = false;
  for (const auto& [t, name] : kTypeNames) {
    if (fields[0] == name) {
      msg.type = t;
      known = true;
    }
  }
  if (!known) throw ParseError(1, "unknown message type '" + std::string(fields[0]) + "'");
  msg.task_id = std::string(fields[1]);
  auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), msg.attempt);
  if (ec != std::errc() || ptr != fields[2].data() + fields[2].size() || msg.attempt < 0) {
    throw ParseError(1, "bad attempt '" + std::string(fields[2]) + "'");
  }
  msg.payload_path = std::string(fields[3]);
  return msg;
}

HostPort parse_host_port(std::string_view address) {
  const std::size_t colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ParameterError("address '" + std::string(address) + "' is not HOST:PORT");
  }
  HostPort hp;
  hp.host = std::string(address.substr(0, colon));
  const auto port = address.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), hp.port);
  if (ec != std::errc() || ptr != port.data() + port.size() || hp.port < 0 || hp.port > 65535) {
    throw ParameterError("bad port in '" + std::string(address) + "'");
  }
  return hp;
}

// ---------------------------------------------------------------------------

namespace {

sockaddr_in resolve(const HostPort& hp) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(hp.port));
  if (hp.host == "*" || hp.host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (::inet_pton(AF_INET, hp.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(hp.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw ParameterError("cannot resolve host '" + hp.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    buffer_ = std::move(other.buffer_);
    other.fd_ = -1;
  }
  return *this;
}

Socket Socket::listen(const HostPort& at) {
  const sockaddr_in addr = resolve(at);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw Error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(s.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(s.fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error("bind " + at.host + ":" + std::to_string(at.port) + ": " + std::strerror(errno));
  }
  if (::listen(s.fd_, 64) != 0) throw Error(std::string("listen: ") + std::strerror(errno));
  return s;
}

Socket Socket::connect(const HostPort& to) {
  const sockaddr_in addr = resolve(to);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw Error(std::string("socket: ") + std::strerror(errno));
  if (::connect(s.fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error("connect " + to.host + ":" + std::to_string(to.port) + ": " + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

Socket Socket::connect_until(const HostPort& to, std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    try {
      return connect(to);
    } catch (const ParameterError&) {
      throw;
    } catch (const Error& e) {
      if (std::chrono::steady_clock::now() >= deadline) {
        throw StartupError(std::string("master unreachable: ") + e.what());
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

int Socket::local_port() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw Error(std::string("getsockname: ") + std::strerror(errno));
  }
  return ntohs(addr.sin_port);
}

Socket Socket::accept() const {
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) throw Error(std::string("accept: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return Socket(fd);
}

void Socket::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

bool Socket::send_all(std::string_view bytes) noexcept {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

bool Socket::fill() noexcept {
  char buf[4096];
  for (;;) {
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer_.append(buf, static_cast<std::size_t>(n));
    return true;
  }
}

std::optional<std::string> Socket::take_line() {
  const std::size_t nl = buffer_.find('\n');
  if (nl == std::string::npos) return std::nullopt;
  std::string line = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);
  return line;
}

std::optional<std::string> Socket::read_line() {
  for (;;) {
    if (auto line = take_line()) return line;
    if (!fill()) return std::nullopt;
  }
}

}  // namespace seizure::mr
