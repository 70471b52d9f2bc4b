#include "qfsum/backend.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "qfsum/error.hpp"

namespace qfsum {

using nlohmann::json;

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

long poll_read(int fd, char* buf, std::size_t cap, std::chrono::milliseconds wait) {
  pollfd pfd{fd, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(wait.count()));
  if (rc == 0) return 0;
  if (rc < 0) return errno == EINTR ? 0 : -1;
  const ssize_t n = ::read(fd, buf, cap);
  if (n > 0) return static_cast<long>(n);
  if (n < 0 && (errno == EINTR || errno == EAGAIN)) return 0;
  return -1;
}

class SubprocessChannel final : public Channel {
 public:
  explicit SubprocessChannel(std::string command) : command_(std::move(command)) {
    ignore_sigpipe();
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw BackendUnavailable("pipe: " + std::string(std::strerror(errno)));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BackendUnavailable("pipe: " + std::string(std::strerror(errno)));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw BackendUnavailable("fork: " + std::string(std::strerror(errno)));
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~SubprocessChannel() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    // Closing stdin asks the backend to exit; escalate if it lingers.
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGTERM);
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  void write_all(std::string_view data) override {
    while (!data.empty()) {
      const ssize_t n = ::write(write_fd_, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendUnavailable("write to '" + command_ + "': " + std::strerror(errno));
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  long read_some(char* buf, std::size_t cap, std::chrono::milliseconds wait) override {
    return poll_read(read_fd_, buf, cap, wait);
  }

  std::string describe() const override { return "subprocess '" + command_ + "'"; }

 private:
  std::string command_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
};

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(std::string host_port) : address_(std::move(host_port)) {
    const auto colon = address_.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address_.size())
      throw InvalidConfig("TCP address must be host:port, got '" + address_ + "'");
    const std::string host = address_.substr(0, colon);
    const std::string port = address_.substr(colon + 1);

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
      throw BackendUnavailable(address_ + ": " + ::gai_strerror(rc));
    std::string last_error = "no addresses";
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      last_error = std::strerror(errno);
      ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw BackendUnavailable(address_ + ": " + last_error);
  }

  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void write_all(std::string_view data) override {
    while (!data.empty()) {
      const ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendUnavailable("send to " + address_ + ": " + std::strerror(errno));
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  long read_some(char* buf, std::size_t cap, std::chrono::milliseconds wait) override {
    return poll_read(fd_, buf, cap, wait);
  }

  std::string describe() const override { return "tcp " + address_; }

 private:
  std::string address_;
  int fd_ = -1;
};

std::string dump_line(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
}

}  // namespace

void BackendConfig::validate() const {
  if (max_batch < 1) throw InvalidConfig("max_batch must be >= 1");
  if (address_or_command.empty()) throw InvalidConfig("backend address/command is empty");
  if (request_timeout.count() <= 0) throw InvalidConfig("request_timeout must be positive");
  if (transport == Transport::TcpSocket) {
    const auto colon = address_or_command.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address_or_command.size())
      throw InvalidConfig("tcp backend address must be host:port, got '" + address_or_command + "'");
  }
}

bool BackendInfo::supports(std::string_view op) const {
  for (const auto& o : ops)
    if (o == op) return true;
  return false;
}

std::unique_ptr<Channel> open_subprocess_channel(const std::string& command) {
  return std::make_unique<SubprocessChannel>(command);
}

std::unique_ptr<Channel> open_tcp_channel(const std::string& host_port) {
  return std::make_unique<TcpChannel>(host_port);
}

BackendConnection::BackendConnection(std::unique_ptr<Channel> channel, BackendConfig cfg)
    : channel_(std::move(channel)), cfg_(std::move(cfg)) {}

std::shared_ptr<BackendConnection> BackendConnection::open(const BackendConfig& cfg,
                                                           std::string_view required_op) {
  cfg.validate();
  auto channel = cfg.transport == Transport::Subprocess ? open_subprocess_channel(cfg.address_or_command)
                                                        : open_tcp_channel(cfg.address_or_command);
  return open(std::move(channel), cfg, required_op);
}

std::shared_ptr<BackendConnection> BackendConnection::open(std::unique_ptr<Channel> channel,
                                                           const BackendConfig& cfg,
                                                           std::string_view required_op) {
  cfg.validate();
  std::shared_ptr<BackendConnection> conn(new BackendConnection(std::move(channel), cfg));
  conn->handshake(required_op);
  conn->reader_ = std::thread([raw = conn.get()] { raw->reader_loop(); });
  return conn;
}

BackendConnection::~BackendConnection() {
  stop_ = true;
  if (reader_.joinable()) reader_.join();
  fail_all(std::make_exception_ptr(BackendUnavailable("connection closed")));
  channel_.reset();
}

BackendConnection::ReadResult BackendConnection::read_line(std::string& line,
                                                            std::chrono::milliseconds wait) {
  const auto deadline = std::chrono::steady_clock::now() + wait;
  while (true) {
    if (auto nl = read_buffer_.find('\n'); nl != std::string::npos) {
      line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return ReadResult::Line;
    }
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return ReadResult::TimedOut;
    char buf[65536];
    const long n = channel_->read_some(
        buf, sizeof buf, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now) +
                             std::chrono::milliseconds(1));
    if (n < 0) return ReadResult::EndOfStream;
    read_buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

void BackendConnection::handshake(std::string_view required_op) {
  channel_->write_all(dump_line(json{{"op", "hello"}}));
  std::string line;
  do {
    switch (read_line(line, cfg_.request_timeout)) {
      case ReadResult::TimedOut:
        throw Timeout("no handshake reply from " + channel_->describe());
      case ReadResult::EndOfStream:
        throw BackendUnavailable(channel_->describe() + " closed before the handshake");
      case ReadResult::Line:
        break;
    }
  } while (line.empty());

  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::parse_error& e) {
    throw HandshakeFailed("unparseable hello reply: " + std::string(e.what()));
  }
  if (!reply.is_object()) throw HandshakeFailed("hello reply is not an object");
  if (reply.contains("error")) throw HandshakeFailed("backend error: " + reply["error"].dump());
  auto ops = reply.find("ops");
  if (ops == reply.end() || !ops->is_array()) throw HandshakeFailed("hello reply lacks an \"ops\" array");
  for (const auto& op : *ops) {
    if (!op.is_string()) throw HandshakeFailed("non-string entry in \"ops\"");
    info_.ops.push_back(op.get<std::string>());
  }
  for (const char* field : {"name", "version"}) {
    if (auto it = reply.find(field); it != reply.end()) {
      if (!it->is_string()) throw HandshakeFailed(std::string("\"") + field + "\" is not a string");
      (std::string_view(field) == "name" ? info_.name : info_.version) = it->get<std::string>();
    }
  }
  if (!info_.supports(required_op))
    throw HandshakeFailed(channel_->describe() + " does not advertise op \"" + std::string(required_op) + "\"");
}

void BackendConnection::fail_all(std::exception_ptr error) {
  std::lock_guard lock(state_mutex_);
  if (!broken_) broken_ = error;
  for (auto& [id, promise] : pending_) promise.set_exception(error);
  pending_.clear();
}

void BackendConnection::reader_loop() {
  std::string line;
  while (!stop_) {
    const auto r = read_line(line, std::chrono::milliseconds(50));
    if (r == ReadResult::TimedOut) continue;
    if (r == ReadResult::EndOfStream) {
      fail_all(std::make_exception_ptr(BackendUnavailable(channel_->describe() + " closed the connection")));
      return;
    }
    if (line.empty()) continue;

    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::parse_error&) {
      fail_all(std::make_exception_ptr(ProtocolViolation("unparseable response line: " + line.substr(0, 200))));
      return;
    }
    auto id_it = reply.is_object() ? reply.find("id") : reply.end();
    if (!reply.is_object() || id_it == reply.end() || !id_it->is_number_unsigned()) {
      fail_all(std::make_exception_ptr(ProtocolViolation("response without a numeric id: " + line.substr(0, 200))));
      return;
    }
    const auto id = id_it->get<std::uint64_t>();

    std::unique_lock lock(state_mutex_);
    if (auto it = pending_.find(id); it != pending_.end()) {
      it->second.set_value(std::move(reply));
      pending_.erase(it);
      continue;
    }
    if (abandoned_.erase(id) > 0) continue;
    lock.unlock();
    fail_all(std::make_exception_ptr(ProtocolViolation("response with unknown id " + std::to_string(id))));
    return;
  }
}

BackendConnection::PendingReply BackendConnection::submit(json message) {
  PendingReply reply;
  reply.id = next_id_++;
  message["id"] = reply.id;
  {
    std::lock_guard lock(state_mutex_);
    if (broken_) std::rethrow_exception(broken_);
    reply.future = pending_[reply.id].get_future();
  }
  try {
    std::lock_guard lock(write_mutex_);
    channel_->write_all(dump_line(message));
  } catch (...) {
    fail_all(std::current_exception());
    throw;
  }
  ++requests_sent_;
  return reply;
}

json BackendConnection::await(PendingReply& reply) {
  if (reply.future.wait_for(cfg_.request_timeout) == std::future_status::timeout) {
    std::lock_guard lock(state_mutex_);
    if (pending_.erase(reply.id) > 0) {
      abandoned_.insert(reply.id);
      throw Timeout("request " + std::to_string(reply.id) + " to " + channel_->describe() + " exceeded " +
                    std::to_string(cfg_.request_timeout.count()) + " ms");
    }
  }
  return reply.future.get();
}

json BackendConnection::request(json message) {
  auto reply = submit(std::move(message));
  return await(reply);
}

ExternalScorer::ExternalScorer(std::shared_ptr<BackendConnection> connection, std::string id_suffix)
    : connection_(std::move(connection)) {
  id_ = "external:" + (connection_->info().name.empty() ? std::string("backend") : connection_->info().name);
  if (!id_suffix.empty()) id_ += ":" + id_suffix;
}

std::string ExternalScorer::id() const { return id_; }

SimilarityScore ExternalScorer::score_pair(std::string_view a, std::string_view b) const {
  const TextPair pair{std::string(a), std::string(b)};
  return score_batch(std::span<const TextPair>(&pair, 1)).front();
}

std::vector<SimilarityScore> ExternalScorer::score_batch(std::span<const TextPair> pairs) const {
  const std::size_t chunk = connection_->config().max_batch;
  std::vector<std::pair<std::size_t, BackendConnection::PendingReply>> inflight;
  for (std::size_t start = 0; start < pairs.size(); start += chunk) {
    const std::size_t end = std::min(pairs.size(), start + chunk);
    json arr = json::array();
    for (std::size_t i = start; i < end; ++i) arr.push_back(json::array({pairs[i].first, pairs[i].second}));
    inflight.emplace_back(start, connection_->submit(json{{"op", "score"}, {"pairs", std::move(arr)}}));
  }

  std::vector<SimilarityScore> out;
  out.reserve(pairs.size());
  for (auto& [start, pending] : inflight) {
    const std::size_t expected = std::min(chunk, pairs.size() - start);
    const json reply = connection_->await(pending);
    if (auto err = reply.find("error"); err != reply.end())
      throw PartialFailure(start, err->is_string() ? err->get<std::string>() : err->dump());
    auto scores = reply.find("scores");
    if (scores == reply.end() || !scores->is_array())
      throw ProtocolViolation("score reply " + std::to_string(pending.id) + " lacks a \"scores\" array");
    if (scores->size() != expected)
      throw ProtocolViolation("score reply " + std::to_string(pending.id) + " has " +
                              std::to_string(scores->size()) + " scores for " + std::to_string(expected) +
                              " pairs");
    for (const auto& s : *scores) {
      if (!s.is_number() || !std::isfinite(s.get<double>()))
        throw ProtocolViolation("score reply " + std::to_string(pending.id) + " contains a non-finite score");
      out.push_back({s.get<double>(), id_});
    }
  }
  return out;
}

std::unique_ptr<ExternalScorer> external_scorer(const BackendConfig& cfg) {
  return std::make_unique<ExternalScorer>(BackendConnection::open(cfg, "score"));
}

}  // namespace qfsum
