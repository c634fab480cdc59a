#include "upad/transport.hpp"

#include <algorithm>

#include "upad/error.hpp"

namespace upad::transport {

namespace {

void put_u32(Bytes& out, std::uint32_t value) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(value >> shift));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes) {
  return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) | (std::uint32_t{bytes[2]} << 8) |
         std::uint32_t{bytes[3]};
}

}  // namespace

Bytes encode_frame(const Frame& frame) {
  if (frame.bits.empty()) throw Error(Errc::invalid_parameter, "frame payload must not be empty");
  if (frame.bits.size() > kMaxBitLength) throw Error(Errc::invalid_parameter, "frame payload too large");
  const auto bit_length = static_cast<std::uint32_t>(frame.bits.size());
  Bytes out(kMagic.begin(), kMagic.end());
  out.reserve(kHeaderSize + (bit_length + 7) / 8);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(frame.kind));
  put_u32(out, frame.step);
  put_u32(out, bit_length);
  std::uint8_t current = 0;
  for (std::size_t i = 0; i < frame.bits.size(); ++i) {
    current = static_cast<std::uint8_t>(current | (frame.bits[i] << (7 - i % 8)));
    if (i % 8 == 7) {
      out.push_back(current);
      current = 0;
    }
  }
  if (bit_length % 8 != 0) out.push_back(current);
  return out;
}

std::size_t frame_size(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderSize) throw Error(Errc::incomplete_frame, "frame header truncated");
  if (!std::equal(kMagic.begin(), kMagic.end(), header.begin())) {
    throw Error(Errc::unsupported_frame, "bad magic");
  }
  if (header[4] != kVersion) throw Error(Errc::unsupported_frame, "unsupported version " + std::to_string(header[4]));
  if (!protocol::record_kind_from_byte(header[5])) {
    throw Error(Errc::unsupported_frame, "unknown frame kind " + std::to_string(header[5]));
  }
  const auto bit_length = get_u32(header.subspan(10, 4));
  if (bit_length == 0 || bit_length > kMaxBitLength) {
    throw Error(Errc::malformed_frame, "bit length " + std::to_string(bit_length) + " out of range");
  }
  return kHeaderSize + (bit_length + 7) / 8;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const auto total = frame_size(bytes);
  if (bytes.size() < total) throw Error(Errc::incomplete_frame, "frame payload truncated");
  if (bytes.size() > total) throw Error(Errc::malformed_frame, "trailing bytes after frame");

  Frame frame;
  frame.kind = *protocol::record_kind_from_byte(bytes[5]);
  frame.step = get_u32(bytes.subspan(6, 4));
  const auto bit_length = get_u32(bytes.subspan(10, 4));
  const auto payload = bytes.subspan(kHeaderSize);
  if (const auto used = bit_length % 8; used != 0) {
    const auto padding_mask = static_cast<std::uint8_t>(0xFFU >> used);
    if ((payload.back() & padding_mask) != 0) throw Error(Errc::malformed_frame, "nonzero padding bits");
  }
  std::vector<std::uint8_t> bits(bit_length);
  for (std::size_t i = 0; i < bit_length; ++i) bits[i] = (payload[i / 8] >> (7 - i % 8)) & 1U;
  frame.bits = BitString(std::move(bits));
  return frame;
}

Frame to_frame(const protocol::TranscriptRecord& record) { return {record.kind, record.step, record.payload}; }

protocol::TranscriptRecord to_record(const Frame& frame) { return {frame.step, frame.kind, frame.bits}; }

std::optional<Frame> Subscription::next() {
  auto bytes = next_bytes();
  if (!bytes) return std::nullopt;
  return decode_frame(*bytes);
}

// ---------------------------------------------------------------------------

namespace {

class MemorySubscription final : public Subscription {
public:
  explicit MemorySubscription(std::shared_ptr<MemoryChannel::Queue> queue) : queue_(std::move(queue)) {}

  std::optional<Bytes> next_bytes() override {
    std::unique_lock lock(queue_->mutex);
    queue_->ready.wait(lock, [&] { return !queue_->frames.empty() || queue_->closed; });
    if (queue_->frames.empty()) return std::nullopt;
    auto bytes = std::move(queue_->frames.front());
    queue_->frames.pop_front();
    return bytes;
  }

private:
  std::shared_ptr<MemoryChannel::Queue> queue_;
};

}  // namespace

MemoryChannel::~MemoryChannel() { close(); }

void MemoryChannel::broadcast(const Frame& frame) {
  const auto bytes = encode_frame(frame);
  std::lock_guard lock(mutex_);
  if (closed_) throw Error(Errc::delivery, "channel closed");
  std::size_t dropped = 0;
  for (auto& weak : queues_) {
    auto queue = weak.lock();
    if (!queue) {
      ++dropped;
      continue;
    }
    {
      std::lock_guard queue_lock(queue->mutex);
      queue->frames.push_back(bytes);
    }
    queue->ready.notify_one();
  }
  if (dropped != 0) {
    std::erase_if(queues_, [](const auto& weak) { return weak.expired(); });
    throw Error(Errc::delivery, std::to_string(dropped) + " subscriber(s) disconnected");
  }
}

std::unique_ptr<Subscription> MemoryChannel::subscribe() {
  auto queue = std::make_shared<Queue>();
  std::lock_guard lock(mutex_);
  if (closed_) queue->closed = true;
  queues_.push_back(queue);
  return std::make_unique<MemorySubscription>(std::move(queue));
}

void MemoryChannel::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  for (auto& weak : queues_) {
    if (auto queue = weak.lock()) {
      {
        std::lock_guard queue_lock(queue->mutex);
        queue->closed = true;
      }
      queue->ready.notify_all();
    }
  }
}

// ---------------------------------------------------------------------------

void broadcast_transcript(Channel& channel, const protocol::Transcript& transcript) {
  for (const auto& record : transcript.records()) channel.broadcast(to_frame(record));
}

std::vector<protocol::FinalKeyPair> serve_system_two(Channel& channel, const SharedKey& shared, std::size_t steps,
                                                     bool leak_final_keys, Rng& rng) {
  auto run = protocol::run_system_two(shared, steps, leak_final_keys, rng,
                                      [&](const protocol::TranscriptRecord& record) {
                                        channel.broadcast(to_frame(record));
                                      });
  return run.alice_keys;
}

std::vector<protocol::FinalKeyPair> follow_system_two(Subscription& subscription, protocol::SystemTwoSession& bob) {
  protocol::SystemTwoFollower follower(bob);
  std::vector<protocol::FinalKeyPair> out;
  while (auto frame = subscription.next()) {
    if (auto finals = follower.feed(to_record(*frame))) out.push_back(std::move(*finals));
  }
  return out;
}

std::vector<Bytes> record_frames(Subscription& subscription) {
  std::vector<Bytes> frames;
  while (auto bytes = subscription.next_bytes()) frames.push_back(std::move(*bytes));
  return frames;
}

protocol::Transcript to_transcript(const std::vector<Bytes>& frames) {
  protocol::Transcript transcript;
  for (const auto& bytes : frames) transcript.append(to_record(decode_frame(bytes)));
  return transcript;
}

}  // namespace upad::transport
