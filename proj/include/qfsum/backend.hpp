#pragma once

// Client for external model backends speaking newline-delimited JSON over a
// child process's stdio or a TCP socket.
//
//   -> {"op":"hello"}
//   <- {"name":str,"version":str,"ops":[str,...]}
//   -> {"id":uint,"op":"score","pairs":[[str,str],...]}
//   <- {"id":uint,"scores":[number,...]} | {"id":uint,"error":str}
//   -> {"id":uint,"op":"generate","query":str,"document":str,"max_new_tokens":uint}
//   <- {"id":uint,"summary":str} | {"id":uint,"error":str}
//
// One connection is shared by all callers; requests are multiplexed by id
// and answered by a reader thread.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qfsum/scorer.hpp"

namespace qfsum {

enum class Transport { Subprocess, TcpSocket };

struct BackendConfig {
  Transport transport = Transport::Subprocess;
  // Shell command for Subprocess, "host:port" for TcpSocket.
  std::string address_or_command;
  std::chrono::milliseconds request_timeout{30000};
  std::size_t max_batch = 64;

  void validate() const;
};

struct BackendInfo {
  std::string name;
  std::string version;
  std::vector<std::string> ops;

  bool supports(std::string_view op) const;
};

/// Byte stream to a backend. Implementations own their file descriptors.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void write_all(std::string_view data) = 0;
  /// Reads up to `cap` bytes, waiting at most `wait`. Returns 0 on timeout,
  /// -1 on end of stream.
  virtual long read_some(char* buf, std::size_t cap, std::chrono::milliseconds wait) = 0;
  virtual std::string describe() const = 0;
};

std::unique_ptr<Channel> open_subprocess_channel(const std::string& command);
std::unique_ptr<Channel> open_tcp_channel(const std::string& host_port);

class BackendConnection {
 public:
  /// Connects and performs the handshake. `required_op` must be advertised.
  static std::shared_ptr<BackendConnection> open(const BackendConfig& cfg, std::string_view required_op);
  /// Same, over an existing channel (used by tests).
  static std::shared_ptr<BackendConnection> open(std::unique_ptr<Channel> channel,
                                                 const BackendConfig& cfg, std::string_view required_op);

  ~BackendConnection();
  BackendConnection(const BackendConnection&) = delete;
  BackendConnection& operator=(const BackendConnection&) = delete;

  const BackendInfo& info() const { return info_; }
  const BackendConfig& config() const { return cfg_; }

  struct PendingReply {
    std::uint64_t id = 0;
    std::future<nlohmann::json> future;
  };

  /// Assigns an id, sends the message and returns a handle for the reply.
  PendingReply submit(nlohmann::json message);
  /// Waits for a submitted reply within the request timeout. Throws Timeout,
  /// or the error that broke the connection.
  nlohmann::json await(PendingReply& reply);
  nlohmann::json request(nlohmann::json message);

  /// Number of messages sent after the handshake.
  std::uint64_t requests_sent() const { return requests_sent_.load(); }

 private:
  BackendConnection(std::unique_ptr<Channel> channel, BackendConfig cfg);

  void handshake(std::string_view required_op);
  enum class ReadResult { Line, TimedOut, EndOfStream };
  ReadResult read_line(std::string& line, std::chrono::milliseconds wait);
  void reader_loop();
  void fail_all(std::exception_ptr error);

  std::unique_ptr<Channel> channel_;
  BackendConfig cfg_;
  BackendInfo info_;
  std::string read_buffer_;

  std::mutex write_mutex_;
  std::mutex state_mutex_;
  std::map<std::uint64_t, std::promise<nlohmann::json>> pending_;
  std::set<std::uint64_t> abandoned_;
  std::exception_ptr broken_;

  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<std::uint64_t> requests_sent_{0};
  std::atomic<bool> stop_{false};
  std::thread reader_;
};

/// Scorer backed by a remote "score" op. Batches are split into chunks of
/// at most max_batch pairs, sent pipelined, and concatenated in order.
class ExternalScorer final : public Scorer {
 public:
  explicit ExternalScorer(std::shared_ptr<BackendConnection> connection, std::string id_suffix = {});

  std::string id() const override;
  SimilarityScore score_pair(std::string_view a, std::string_view b) const override;
  std::vector<SimilarityScore> score_batch(std::span<const TextPair> pairs) const override;

  const BackendConnection& connection() const { return *connection_; }

 private:
  std::shared_ptr<BackendConnection> connection_;
  std::string id_;
};

/// Connects to a backend that advertises "score".
std::unique_ptr<ExternalScorer> external_scorer(const BackendConfig& cfg);

}  // namespace qfsum
