#include "ppknn/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstring>

namespace ppknn {

// ---------------------------------------------------------------------------
// In-process channel

namespace {

struct PipeState {
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::vector<uint8_t>> queue[2];  // queue[i] feeds side i
  bool closed = false;
};

class InProcessChannel : public Channel {
public:
  InProcessChannel(std::shared_ptr<PipeState> state, int side)
      : state_(std::move(state)), side_(side) {}

  ~InProcessChannel() override { close(); }

  void send(std::vector<uint8_t> frame) override {
    std::lock_guard lock(state_->mutex);
    if (state_->closed) fail(Errc::transport_disconnected, "channel closed");
    state_->queue[1 - side_].push_back(std::move(frame));
    state_->cv.notify_all();
  }

  std::vector<uint8_t> recv() override {
    std::unique_lock lock(state_->mutex);
    state_->cv.wait(lock, [&] { return !state_->queue[side_].empty() || state_->closed; });
    if (state_->queue[side_].empty()) {
      fail(Errc::transport_disconnected, "channel closed");
    }
    auto frame = std::move(state_->queue[side_].front());
    state_->queue[side_].pop_front();
    return frame;
  }

  void close() override {
    std::lock_guard lock(state_->mutex);
    state_->closed = true;
    state_->cv.notify_all();
  }

private:
  std::shared_ptr<PipeState> state_;
  int side_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_in_process_pair() {
  auto state = std::make_shared<PipeState>();
  return {std::make_unique<InProcessChannel>(state, 0),
          std::make_unique<InProcessChannel>(state, 1)};
}

// ---------------------------------------------------------------------------
// Socket channel

namespace {

constexpr size_t kMaxFrameBytes = (size_t{1} << 24) + (size_t{1} << 19);

struct HostPort {
  std::string host;
  std::string port;
};

HostPort split_host_port(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    fail(Errc::io_error, "expected host:port, got '" + text + "'");
  }
  return {text.substr(0, colon), text.substr(colon + 1)};
}

class SocketChannel : public Channel {
public:
  explicit SocketChannel(int fd) : fd_(fd) {}
  ~SocketChannel() override { close(); }

  void send(std::vector<uint8_t> frame) override {
    uint8_t header[4];
    for (int i = 0; i < 4; ++i) header[i] = static_cast<uint8_t>(frame.size() >> (24 - 8 * i));
    std::lock_guard lock(send_mutex_);
    write_all(header, 4);
    write_all(frame.data(), frame.size());
  }

  std::vector<uint8_t> recv() override {
    uint8_t header[4];
    read_all(header, 4, /*at_boundary=*/true);
    size_t len = 0;
    for (int i = 0; i < 4; ++i) len = len << 8 | header[i];
    if (len > kMaxFrameBytes) fail(Errc::frame_corrupt, "frame length out of bounds");
    std::vector<uint8_t> frame(len);
    read_all(frame.data(), len, /*at_boundary=*/false);
    return frame;
  }

  void close() override {
    int fd = fd_.exchange(-1);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
  }

private:
  void write_all(const uint8_t* data, size_t len) {
    size_t sent = 0;
    while (sent < len) {
      int fd = fd_.load();
      if (fd < 0) fail(Errc::transport_disconnected, "socket closed");
      ssize_t n = ::send(fd, data + sent, len - sent, MSG_NOSIGNAL);
      if (n <= 0) fail(Errc::transport_disconnected, "socket send failed");
      sent += static_cast<size_t>(n);
    }
  }

  // at_boundary: EOF before the first byte of a frame is a clean disconnect;
  // EOF anywhere else is a truncated frame.
  void read_all(uint8_t* data, size_t len, bool at_boundary) {
    size_t got = 0;
    while (got < len) {
      int fd = fd_.load();
      if (fd < 0) fail(Errc::transport_disconnected, "socket closed");
      ssize_t n = ::recv(fd, data + got, len - got, 0);
      if (n == 0) {
        if (at_boundary && got == 0) {
          fail(Errc::transport_disconnected, "peer closed the connection");
        }
        fail(Errc::frame_corrupt, "stream truncated mid-frame");
      }
      if (n < 0) fail(Errc::transport_disconnected, "socket recv failed");
      got += static_cast<size_t>(n);
    }
  }

  std::atomic<int> fd_;
  std::mutex send_mutex_;
};

int make_connected_socket(const HostPort& hp) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(hp.host.c_str(), hp.port.c_str(), &hints, &res) != 0 || res == nullptr) {
    fail(Errc::transport_disconnected, "cannot resolve " + hp.host + ":" + hp.port);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) {
    fail(Errc::transport_disconnected, "cannot connect to " + hp.host + ":" + hp.port);
  }
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

}  // namespace

std::unique_ptr<Channel> connect_socket(const std::string& host_port) {
  return std::make_unique<SocketChannel>(make_connected_socket(split_host_port(host_port)));
}

SocketListener::SocketListener(const std::string& host_port) {
  HostPort hp = split_host_port(host_port);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (getaddrinfo(hp.host.c_str(), hp.port.c_str(), &hints, &res) != 0 || res == nullptr) {
    fail(Errc::io_error, "cannot resolve " + host_port);
  }
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) continue;
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd_, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd_, 8) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  freeaddrinfo(res);
  if (fd_ < 0) fail(Errc::io_error, "cannot bind " + host_port);

  sockaddr_storage addr{};
  socklen_t addr_len = sizeof(addr);
  if (getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &addr_len) == 0) {
    if (addr.ss_family == AF_INET) {
      port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    } else if (addr.ss_family == AF_INET6) {
      port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    }
  }
}

SocketListener::~SocketListener() { close(); }

std::unique_ptr<Channel> SocketListener::accept() {
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) fail(Errc::transport_disconnected, "accept failed");
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::make_unique<SocketChannel>(fd);
}

void SocketListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

// ---------------------------------------------------------------------------
// Session

Session::Session(Endpoint* endpoint, uint64_t id, ProtocolTag tag)
    : endpoint_(endpoint), id_(id), tag_(tag) {}

Session::Session(Session&& other) noexcept { *this = std::move(other); }

Session& Session::operator=(Session&& other) noexcept {
  if (this != &other) {
    close();
    endpoint_ = other.endpoint_;
    id_ = other.id_;
    tag_ = other.tag_;
    next_send_ = other.next_send_;
    next_recv_ = other.next_recv_;
    other.endpoint_ = nullptr;
  }
  return *this;
}

Session::~Session() { close(); }

void Session::send(std::vector<mpz_class> values) {
  if (endpoint_ == nullptr) fail(Errc::transport_disconnected, "session closed");
  ProtocolMessage msg;
  msg.session_id = id_;
  msg.tag = tag_;
  msg.sequence_no = next_send_++;
  msg.payload = std::move(values);
  endpoint_->send_message(std::move(msg));
}

std::vector<mpz_class> Session::recv() {
  if (endpoint_ == nullptr) fail(Errc::transport_disconnected, "session closed");
  ProtocolMessage msg = endpoint_->wait_message(id_);
  if (msg.sequence_no != next_recv_) {
    fail(Errc::sequence_gap, "expected sequence " + std::to_string(next_recv_) + ", got " +
                                 std::to_string(msg.sequence_no));
  }
  ++next_recv_;
  return std::move(msg.payload);
}

std::vector<mpz_class> Session::call(std::vector<mpz_class> request) {
  send(std::move(request));
  return recv();
}

void Session::close() {
  if (endpoint_ != nullptr) {
    endpoint_->drop_session(id_);
    endpoint_ = nullptr;
  }
}

// ---------------------------------------------------------------------------
// Endpoint

Endpoint::Endpoint(std::unique_ptr<Channel> channel, PartyRole role, EndpointOptions options)
    : channel_(std::move(channel)), role_(role), options_(options) {
  pump_thread_ = std::thread([this] { pump(); });
}

Endpoint::~Endpoint() {
  close();
  if (pump_thread_.joinable()) pump_thread_.join();
}

void Endpoint::close() { channel_->close(); }

Transcript Endpoint::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

void Endpoint::poison(const Error& error) {
  std::lock_guard lock(mutex_);
  if (!failure_) failure_.emplace(error);
  cv_.notify_all();
}

void Endpoint::raise_if_poisoned_locked() const {
  if (failure_) throw *failure_;
}

void Endpoint::pump() {
  try {
    for (;;) {
      ProtocolMessage msg = decode_message(channel_->recv());
      std::lock_guard lock(mutex_);
      if (options_.record_transcript) {
        transcript_.items.push_back({TranscriptItem::Direction::received, msg,
                                     std::chrono::system_clock::now()});
      }
      auto it = inboxes_.find(msg.session_id);
      if (msg.sequence_no == 0) {
        if (!msg.payload.empty()) fail(Errc::frame_corrupt, "open frame carries payload");
        if (it != inboxes_.end()) {
          if (!it->second.awaiting_ack) {
            fail(Errc::session_id_collision,
                 "open for live session " + std::to_string(msg.session_id));
          }
          it->second.awaiting_ack = false;
          it->second.queue.push_back(std::move(msg));
        } else {
          inboxes_[msg.session_id];  // buffer data that may arrive before accept
          pending_opens_.emplace_back(msg.session_id, msg.tag);
        }
      } else {
        if (it == inboxes_.end()) {
          fail(Errc::frame_corrupt, "data frame for unknown session");
        }
        it->second.queue.push_back(std::move(msg));
      }
      cv_.notify_all();
    }
  } catch (const Error& e) {
    poison(e);
  } catch (const std::exception& e) {
    poison(Error(Errc::transport_disconnected, e.what()));
  }
}

void Endpoint::send_message(ProtocolMessage msg) {
  auto frame = encode_message(msg);
  if (options_.record_transcript) {
    std::lock_guard lock(mutex_);
    transcript_.items.push_back(
        {TranscriptItem::Direction::sent, msg, std::chrono::system_clock::now()});
  }
  std::lock_guard lock(send_mutex_);
  channel_->send(std::move(frame));
}

ProtocolMessage Endpoint::wait_message(uint64_t session_id) {
  std::unique_lock lock(mutex_);
  for (;;) {
    auto it = inboxes_.find(session_id);
    if (it == inboxes_.end()) fail(Errc::transport_disconnected, "session dropped");
    if (!it->second.queue.empty()) {
      ProtocolMessage msg = std::move(it->second.queue.front());
      it->second.queue.pop_front();
      return msg;
    }
    raise_if_poisoned_locked();
    cv_.wait(lock);
  }
}

void Endpoint::drop_session(uint64_t session_id) {
  std::lock_guard lock(mutex_);
  inboxes_.erase(session_id);
}

Session Endpoint::open_session(ProtocolTag tag) {
  uint64_t id;
  {
    std::lock_guard lock(mutex_);
    id = next_session_id_++;
  }
  return open_session(tag, id);
}

Session Endpoint::open_session(ProtocolTag tag, uint64_t session_id) {
  {
    std::lock_guard lock(mutex_);
    raise_if_poisoned_locked();
    auto [it, inserted] = inboxes_.try_emplace(session_id);
    if (!inserted) fail(Errc::session_id_collision, "session id already in use locally");
    it->second.awaiting_ack = true;
  }
  ProtocolMessage open;
  open.session_id = session_id;
  open.tag = tag;
  open.sequence_no = 0;
  try {
    send_message(std::move(open));
    ProtocolMessage ack = wait_message(session_id);
    if (ack.sequence_no != 0 || !ack.payload.empty()) {
      fail(Errc::frame_corrupt, "bad open acknowledgement");
    }
  } catch (...) {
    drop_session(session_id);
    throw;
  }
  return Session(this, session_id, tag);
}

Session Endpoint::accept_session() {
  uint64_t id;
  ProtocolTag tag;
  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !pending_opens_.empty() || failure_.has_value(); });
    if (pending_opens_.empty()) raise_if_poisoned_locked();
    std::tie(id, tag) = pending_opens_.front();
    pending_opens_.pop_front();
  }
  ProtocolMessage ack;
  ack.session_id = id;
  ack.tag = tag;
  ack.sequence_no = 0;
  send_message(std::move(ack));
  return Session(this, id, tag);
}

}  // namespace ppknn
