#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpa::segment {

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Line-oriented duplex transport to an external backend process.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send_line(const std::string& line) = 0;
  /// Next full line without the newline. Throws BackendError on timeout or
  /// closed stream.
  virtual std::string recv_line(int timeout_ms) = 0;
};

/// Spawns `command` via the shell and talks NDJSON over its stdio.
std::unique_ptr<Channel> open_process_channel(const std::string& command);

/// Connects to host:port and talks NDJSON over the socket.
std::unique_ptr<Channel> open_tcp_channel(const std::string& host, int port);

/// Parses a backend address: "exec:<command>" or "tcp:<host>:<port>".
std::unique_ptr<Channel> open_channel(const std::string& address);

/// Request/response broker: newline-delimited JSON messages matched by id,
/// with a bounded number of requests in flight.
class WireClient {
 public:
  explicit WireClient(std::unique_ptr<Channel> channel,
                      int timeout_ms = 120000, int max_in_flight = 4);

  /// {"op":"hello"} handshake; returns the backend's hello message.
  nlohmann::json hello();

  /// Fresh request id (monotonic counter with a prefix).
  std::string next_id(const std::string& prefix);

  /// Single round-trip. The request must carry an "id"; returns the matching
  /// "result" or "error" message.
  nlohmann::json call(const nlohmann::json& request);

  /// Pipelined round-trips honoring the in-flight bound; responses are
  /// returned in request order.
  std::vector<nlohmann::json> call_batch(
      const std::vector<nlohmann::json>& requests);

 private:
  nlohmann::json read_message();
  nlohmann::json await(const std::string& id);

  std::unique_ptr<Channel> channel_;
  int timeout_ms_;
  int max_in_flight_;
  uint64_t counter_ = 0;
  std::map<std::string, nlohmann::json> stash_;  // out-of-order responses
};

}  // namespace mpa::segment
