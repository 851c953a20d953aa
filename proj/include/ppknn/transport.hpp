#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ppknn/errors.hpp"
#include "ppknn/wire.hpp"

namespace ppknn {

enum class PartyRole { p1, p2 };

/// Ordered, reliable, bidirectional frame pipe. A frame is one encoded
/// ProtocolMessage; corruption checks happen at decode time.
class Channel {
public:
  virtual ~Channel() = default;
  virtual void send(std::vector<uint8_t> frame) = 0;
  /// Blocks for the next frame; throws transport-disconnected on clean close
  /// and frame-corrupt on a truncated stream.
  virtual std::vector<uint8_t> recv() = 0;
  virtual void close() = 0;
};

/// Two connected in-process channel ends backed by a queue pair.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_in_process_pair();

/// Stream-socket transport. On the wire every frame is prefixed with a
/// 4-byte big-endian length.
std::unique_ptr<Channel> connect_socket(const std::string& host_port);

class SocketListener {
public:
  /// Binds and listens on "host:port"; port 0 asks the OS for a free port.
  explicit SocketListener(const std::string& host_port);
  ~SocketListener();

  SocketListener(const SocketListener&) = delete;
  SocketListener& operator=(const SocketListener&) = delete;

  uint16_t port() const { return port_; }
  std::unique_ptr<Channel> accept();
  void close();

private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

struct TranscriptItem {
  enum class Direction { sent, received };
  Direction direction;
  ProtocolMessage message;
  std::chrono::system_clock::time_point wall_time;
};

struct Transcript {
  std::vector<TranscriptItem> items;
};

struct EndpointOptions {
  bool record_transcript = false;
};

class Endpoint;

/// Handle for one protocol session. Sequence numbers increase by one per
/// direction; the open handshake uses sequence 0, data starts at 1.
class Session {
public:
  Session() = default;
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;
  ~Session();

  uint64_t id() const { return id_; }
  ProtocolTag tag() const { return tag_; }
  bool is_open() const { return endpoint_ != nullptr; }

  void send(std::vector<mpz_class> values);
  std::vector<mpz_class> recv();
  std::vector<mpz_class> call(std::vector<mpz_class> request);

  /// Releases the endpoint-side inbox. Idempotent.
  void close();

private:
  friend class Endpoint;
  Session(Endpoint* endpoint, uint64_t id, ProtocolTag tag);

  Endpoint* endpoint_ = nullptr;
  uint64_t id_ = 0;
  ProtocolTag tag_ = ProtocolTag::sm;
  uint32_t next_send_ = 1;
  uint32_t next_recv_ = 1;
};

/// Demultiplexes one channel into per-session message streams. A background
/// pump thread routes inbound frames by session id; a frame with sequence 0
/// for an unknown session is an open request and lands in the accept queue.
class Endpoint {
public:
  Endpoint(std::unique_ptr<Channel> channel, PartyRole role, EndpointOptions options = {});
  ~Endpoint();

  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  PartyRole role() const { return role_; }

  /// Initiator side: allocates a session id, performs the open handshake.
  Session open_session(ProtocolTag tag);
  /// As above with a caller-chosen id (collision behaviour is observable).
  Session open_session(ProtocolTag tag, uint64_t session_id);

  /// Responder side: blocks for the next open request and acknowledges it.
  Session accept_session();

  void close();

  Transcript transcript() const;

private:
  friend class Session;

  struct Inbox {
    std::deque<ProtocolMessage> queue;
    bool awaiting_ack = false;
  };

  void pump();
  void poison(const Error& error);
  void raise_if_poisoned_locked() const;
  void send_message(ProtocolMessage msg);
  ProtocolMessage wait_message(uint64_t session_id);
  void drop_session(uint64_t session_id);
  Session finish_open(uint64_t session_id, ProtocolTag tag);

  std::unique_ptr<Channel> channel_;
  PartyRole role_;
  EndpointOptions options_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::map<uint64_t, Inbox> inboxes_;
  std::deque<std::pair<uint64_t, ProtocolTag>> pending_opens_;
  std::optional<Error> failure_;
  uint64_t next_session_id_ = 1;
  Transcript transcript_;

  std::mutex send_mutex_;
  std::thread pump_thread_;
};

}  // namespace ppknn
