#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "upad/error.hpp"
#include "upad/transport.hpp"

namespace upad::transport {

namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const Endpoint& endpoint) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(endpoint.host.c_str(), nullptr, &hints, &found); rc != 0 || found == nullptr) {
    throw Error(Errc::io, "cannot resolve host '" + endpoint.host + "': " + ::gai_strerror(rc));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, found->ai_addr, sizeof(addr));
  ::freeaddrinfo(found);
  addr.sin_port = htons(endpoint.port);
  return addr;
}

bool send_all(int fd, const Bytes& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto rc = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return false;
    sent += static_cast<std::size_t>(rc);
  }
  return true;
}

// Returns bytes read; short only at end of stream.
std::size_t recv_all(int fd, std::uint8_t* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const auto rc = ::recv(fd, data + got, size - got, 0);
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) throw Error(Errc::delivery, "receive failed: " + errno_text());
    if (rc == 0) break;
    got += static_cast<std::size_t>(rc);
  }
  return got;
}

class SocketSubscription final : public Subscription {
public:
  explicit SocketSubscription(int fd) : fd_(fd) {}
  ~SocketSubscription() override { ::close(fd_); }
  SocketSubscription(const SocketSubscription&) = delete;
  SocketSubscription& operator=(const SocketSubscription&) = delete;

  std::optional<Bytes> next_bytes() override {
    Bytes bytes(kHeaderSize);
    const auto got = recv_all(fd_, bytes.data(), kHeaderSize);
    if (got == 0) return std::nullopt;
    if (got < kHeaderSize) throw Error(Errc::incomplete_frame, "stream ended inside a frame header");
    const auto total = frame_size(bytes);
    bytes.resize(total);
    if (recv_all(fd_, bytes.data() + kHeaderSize, total - kHeaderSize) != total - kHeaderSize) {
      throw Error(Errc::incomplete_frame, "stream ended inside a frame payload");
    }
    return bytes;
  }

private:
  int fd_;
};

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw Error(Errc::parse_error, "expected host:port, got '" + text + "'");
  }
  Endpoint endpoint;
  if (colon > 0) endpoint.host = text.substr(0, colon);
  const auto port_text = text.substr(colon + 1);
  unsigned long port = 0;
  std::size_t used = 0;
  try {
    port = std::stoul(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port_text.size() || port > 65535) throw Error(Errc::parse_error, "bad port '" + port_text + "'");
  endpoint.port = static_cast<std::uint16_t>(port);
  return endpoint;
}

std::unique_ptr<Subscription> connect(const Endpoint& endpoint) {
  const auto addr = resolve(endpoint);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(Errc::io, "socket: " + errno_text());
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    const auto text = errno_text();
    ::close(fd);
    throw Error(Errc::io, "connect to " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " + text);
  }
  return std::make_unique<SocketSubscription>(fd);
}

SocketServer::SocketServer(const Endpoint& listen) : host_(listen.host) {
  const auto addr = resolve(listen);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(Errc::io, "socket: " + errno_text());
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const auto text = errno_text();
    ::close(listen_fd_);
    throw Error(Errc::io, "listen on " + listen.host + ":" + std::to_string(listen.port) + ": " + text);
  }
  sockaddr_in bound{};
  socklen_t length = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &length);
  port_ = ntohs(bound.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

SocketServer::~SocketServer() { close(); }

void SocketServer::accept_loop() {
  for (;;) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof(yes));
    std::lock_guard lock(mutex_);
    if (closed_) {
      ::close(fd);
      return;
    }
    clients_.push_back(fd);
    accepted_.notify_all();
  }
}

std::size_t SocketServer::subscriber_count() {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

bool SocketServer::wait_for_subscribers(std::size_t count, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return accepted_.wait_for(lock, timeout, [&] { return clients_.size() >= count; });
}

void SocketServer::broadcast(const Frame& frame) {
  const auto bytes = encode_frame(frame);
  std::lock_guard lock(mutex_);
  if (closed_) throw Error(Errc::delivery, "server closed");
  std::size_t dropped = 0;
  std::erase_if(clients_, [&](int fd) {
    if (send_all(fd, bytes)) return false;
    ::close(fd);
    ++dropped;
    return true;
  });
  if (dropped != 0) throw Error(Errc::delivery, std::to_string(dropped) + " subscriber(s) disconnected");
}

std::unique_ptr<Subscription> SocketServer::subscribe() {
  std::size_t before = 0;
  {
    std::lock_guard lock(mutex_);
    before = clients_.size();
  }
  auto subscription = connect({host_ == "0.0.0.0" ? "127.0.0.1" : host_, port_});
  if (!wait_for_subscribers(before + 1, std::chrono::seconds(10))) {
    throw Error(Errc::io, "server did not accept the subscription");
  }
  return subscription;
}

void SocketServer::close() {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    closed_ = true;
    for (int fd : clients_) {
      ::shutdown(fd, SHUT_WR);
      ::close(fd);
    }
    clients_.clear();
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
}

}  // namespace upad::transport
