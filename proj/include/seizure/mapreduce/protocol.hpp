#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace seizure::mr {

// One message per line: TYPE \t task_id \t attempt \t payload_path \n
// See docs/protocol.md for the meaning of each field per type.
enum class MessageType { Register, Assign, Result, Failed, Heartbeat, Shutdown, Submit, Done };

std::string_view to_string(MessageType type) noexcept;

struct Message {
  MessageType type = MessageType::Heartbeat;
  std::string task_id = "-";
  int attempt = 0;
  std::string payload_path = "-";

  friend bool operator==(const Message&, const Message&) = default;
};

/// Includes the trailing newline. Tabs and newlines inside fields are
/// replaced by spaces.
std::string format_message(const Message& msg);
/// Accepts a line without its newline; throws ParseError.
Message parse_message(std::string_view line);

struct HostPort {
  std::string host;
  int port = 0;
};
HostPort parse_host_port(std::string_view address);

/// Owning TCP socket with a line-oriented read buffer.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& other) noexcept : fd_(other.fd_), buffer_(std::move(other.buffer_)) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  static Socket listen(const HostPort& at);
  static Socket connect(const HostPort& to);
  /// Retries until `deadline`; throws StartupError when it passes.
  static Socket connect_until(const HostPort& to, std::chrono::steady_clock::time_point deadline);

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int local_port() const;
  Socket accept() const;
  void close() noexcept;
  /// Disables further sends and receives without releasing the descriptor.
  void shutdown() noexcept;

  /// Returns false when the peer is gone.
  bool send_all(std::string_view bytes) noexcept;
  bool send(const Message& msg) noexcept { return send_all(format_message(msg)); }

  /// Reads whatever is available (one recv call). Returns false on EOF/error.
  bool fill() noexcept;
  /// Next complete buffered line, without its newline.
  std::optional<std::string> take_line();
  /// Blocks until a full line arrives; nullopt on EOF.
  std::optional<std::string> read_line();

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace seizure::mr
