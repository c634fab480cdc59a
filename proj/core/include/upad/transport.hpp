#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "upad/bits.hpp"
#include "upad/protocol.hpp"
#include "upad/random.hpp"
#include "upad/transcript.hpp"

namespace upad::transport {

using FrameKind = protocol::RecordKind;
using Bytes = std::vector<std::uint8_t>;

// Wire layout, integers big-endian:
//   0  magic "UPAD"
//   4  version (1)
//   5  kind (1..5)
//   6  step (u32)
//  10  bit_length (u32)
//  14  payload, ceil(bit_length / 8) bytes, leftmost bit in the MSB,
//      unused low bits of the last byte zero
inline constexpr std::array<std::uint8_t, 4> kMagic{'U', 'P', 'A', 'D'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 14;
inline constexpr std::uint32_t kMaxBitLength = 1U << 28;

struct Frame {
  FrameKind kind = FrameKind::seq;
  std::uint32_t step = 0;
  BitString bits;

  friend bool operator==(const Frame&, const Frame&) = default;
};

[[nodiscard]] Bytes encode_frame(const Frame& frame);
/// Decodes exactly one frame; extra trailing bytes are malformed.
[[nodiscard]] Frame decode_frame(std::span<const std::uint8_t> bytes);
/// Total frame size announced by a header; validates magic, version and kind.
[[nodiscard]] std::size_t frame_size(std::span<const std::uint8_t> header);

[[nodiscard]] Frame to_frame(const protocol::TranscriptRecord& record);
[[nodiscard]] protocol::TranscriptRecord to_record(const Frame& frame);

class Subscription {
public:
  virtual ~Subscription() = default;
  /// Raw bytes of the next frame, or nullopt once the channel is closed and drained.
  virtual std::optional<Bytes> next_bytes() = 0;
  std::optional<Frame> next();
};

/// One-to-many ordered frame delivery. Every subscriber sees every frame
/// broadcast after it subscribed, in broadcast order.
class Channel {
public:
  virtual ~Channel() = default;
  /// Throws Errc::delivery if any subscriber has gone away; the frame still
  /// reaches all remaining subscribers.
  virtual void broadcast(const Frame& frame) = 0;
  virtual std::unique_ptr<Subscription> subscribe() = 0;
  /// Ends every subscription after its queued frames.
  virtual void close() = 0;
};

class MemoryChannel final : public Channel {
public:
  MemoryChannel() = default;
  ~MemoryChannel() override;

  void broadcast(const Frame& frame) override;
  std::unique_ptr<Subscription> subscribe() override;
  void close() override;

  struct Queue {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<Bytes> frames;
    bool closed = false;
  };

private:
  std::mutex mutex_;
  std::vector<std::weak_ptr<Queue>> queues_;
  bool closed_ = false;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Parses "host:port".
[[nodiscard]] Endpoint parse_endpoint(const std::string& text);

/// TCP broadcast server. Subscribers are stream connections; each frame is
/// written whole to each connection under one lock.
class SocketServer final : public Channel {
public:
  /// Port 0 binds an ephemeral port; see port().
  explicit SocketServer(const Endpoint& listen);
  ~SocketServer() override;
  SocketServer(const SocketServer&) = delete;
  SocketServer& operator=(const SocketServer&) = delete;

  [[nodiscard]] std::uint16_t port() const noexcept { return port_; }
  [[nodiscard]] std::size_t subscriber_count();
  /// Blocks until `count` subscribers are connected or the timeout passes.
  bool wait_for_subscribers(std::size_t count, std::chrono::milliseconds timeout);

  void broadcast(const Frame& frame) override;
  /// Connects a client socket to this server and waits until it is accepted.
  std::unique_ptr<Subscription> subscribe() override;
  void close() override;

private:
  void accept_loop();

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::string host_;
  std::mutex mutex_;
  std::condition_variable accepted_;
  std::vector<int> clients_;
  bool closed_ = false;
  std::thread acceptor_;
};

/// Client side of SocketServer.
[[nodiscard]] std::unique_ptr<Subscription> connect(const Endpoint& endpoint);

/// Broadcasts every record of a transcript, in order.
void broadcast_transcript(Channel& channel, const protocol::Transcript& transcript);

/// Runs a seeded System-II session as server and party A, publishing every
/// public value on `channel`. Returns A's final keys.
std::vector<protocol::FinalKeyPair> serve_system_two(Channel& channel, const SharedKey& shared, std::size_t steps,
                                                     bool leak_final_keys, Rng& rng);

/// Party B: follows the broadcast until the channel closes.
std::vector<protocol::FinalKeyPair> follow_system_two(Subscription& subscription, protocol::SystemTwoSession& bob);

/// Eve: records every frame until the channel closes.
[[nodiscard]] std::vector<Bytes> record_frames(Subscription& subscription);
[[nodiscard]] protocol::Transcript to_transcript(const std::vector<Bytes>& frames);

}  // namespace upad::transport
