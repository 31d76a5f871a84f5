#include "mpa/segment/wire.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

namespace mpa::segment {

namespace {

void ignore_sigpipe() {
  // A dead backend must surface as EPIPE on write, not kill the process.
  static const bool once = [] {
    signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

/// Shared line framing over a file descriptor pair (equal fds for sockets).
class FdChannel : public Channel {
 public:
  FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {
    ignore_sigpipe();
  }

  void send_line(const std::string& line) override {
    std::string framed = line;
    framed.push_back('\n');
    size_t off = 0;
    while (off < framed.size()) {
      const ssize_t n =
          ::write(write_fd_, framed.data() + off, framed.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("backend write failed: ") +
                           std::strerror(errno));
      }
      off += static_cast<size_t>(n);
    }
  }

  std::string recv_line(int timeout_ms) override {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        throw BackendError("backend response timeout");
      }
      struct pollfd pfd = {read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) throw BackendError("backend response timeout");
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("backend read failed: ") +
                           std::strerror(errno));
      }
      if (n == 0) throw BackendError("backend closed the stream");
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 protected:
  int read_fd_;
  int write_fd_;

 private:
  std::string buffer_;
};

class ProcessChannel : public FdChannel {
 public:
  ProcessChannel(pid_t pid, int read_fd, int write_fd)
      : FdChannel(read_fd, write_fd), pid_(pid) {}

  ~ProcessChannel() override {
    ::close(write_fd_);  // EOF tells a well-behaved backend to exit
    ::close(read_fd_);
    for (int i = 0; i < 20; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      ::usleep(100 * 1000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

 private:
  pid_t pid_;
};

class TcpChannel : public FdChannel {
 public:
  explicit TcpChannel(int fd) : FdChannel(fd, fd) {}
  ~TcpChannel() override { ::close(read_fd_); }
};

}  // namespace

std::unique_ptr<Channel> open_process_channel(const std::string& command) {
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw BackendError("pipe() failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError("fork() failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<ProcessChannel>(pid, from_child[0], to_child[1]);
}

std::unique_ptr<Channel> open_tcp_channel(const std::string& host, int port) {
  struct addrinfo hints;
  std::memset(&hints, 0, sizeof(hints));
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  struct addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
    throw BackendError("cannot resolve backend host " + host);
  }
  int fd = -1;
  for (struct addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw BackendError("cannot connect to backend " + host + ":" + service);
  }
  return std::make_unique<TcpChannel>(fd);
}

std::unique_ptr<Channel> open_channel(const std::string& address) {
  if (address.rfind("exec:", 0) == 0) {
    return open_process_channel(address.substr(5));
  }
  if (address.rfind("tcp:", 0) == 0) {
    const std::string rest = address.substr(4);
    const size_t colon = rest.rfind(':');
    if (colon == std::string::npos) {
      throw BackendError("tcp address must be tcp:<host>:<port>");
    }
    return open_tcp_channel(rest.substr(0, colon),
                            std::stoi(rest.substr(colon + 1)));
  }
  throw BackendError("unknown backend address scheme: " + address);
}

WireClient::WireClient(std::unique_ptr<Channel> channel, int timeout_ms,
                       int max_in_flight)
    : channel_(std::move(channel)),
      timeout_ms_(timeout_ms),
      max_in_flight_(max_in_flight > 0 ? max_in_flight : 1) {}

nlohmann::json WireClient::read_message() {
  const std::string line = channel_->recv_line(timeout_ms_);
  nlohmann::json msg = nlohmann::json::parse(line, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) {
    throw BackendError("malformed backend response: " + line);
  }
  return msg;
}

nlohmann::json WireClient::hello() {
  channel_->send_line(nlohmann::json{{"op", "hello"}}.dump());
  nlohmann::json msg = read_message();
  if (msg.value("op", "") != "hello") {
    throw BackendError("backend handshake failed: " + msg.dump());
  }
  return msg;
}

std::string WireClient::next_id(const std::string& prefix) {
  return prefix + "#" + std::to_string(counter_++);
}

nlohmann::json WireClient::await(const std::string& id) {
  const auto hit = stash_.find(id);
  if (hit != stash_.end()) {
    nlohmann::json msg = std::move(hit->second);
    stash_.erase(hit);
    return msg;
  }
  for (;;) {
    nlohmann::json msg = read_message();
    const std::string op = msg.value("op", "");
    if (op != "result" && op != "error") {
      throw BackendError("unexpected backend message: " + msg.dump());
    }
    const std::string got = msg.value("id", "");
    if (got == id) return msg;
    if (got.empty()) throw BackendError("backend response without id");
    stash_[got] = std::move(msg);
  }
}

nlohmann::json WireClient::call(const nlohmann::json& request) {
  channel_->send_line(request.dump());
  return await(request.at("id").get<std::string>());
}

std::vector<nlohmann::json> WireClient::call_batch(
    const std::vector<nlohmann::json>& requests) {
  std::vector<nlohmann::json> responses(requests.size());
  size_t sent = 0;
  for (size_t i = 0; i < requests.size(); ++i) {
    while (sent < requests.size() &&
           sent - i < static_cast<size_t>(max_in_flight_)) {
      channel_->send_line(requests[sent].dump());
      ++sent;
    }
    responses[i] = await(requests[i].at("id").get<std::string>());
  }
  return responses;
}

}  // namespace mpa::segment
