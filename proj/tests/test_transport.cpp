#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include "worked_example.hpp"
#include "upad/error.hpp"
#include "upad/transport.hpp"

using namespace upad;
using namespace upad::transport;

namespace {

BitString bits(std::string_view text) { return BitString::parse(text); }

template <typename F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an upad::Error";
  return Errc::io;
}

// Independent packer: chop the ASCII bits into 8-character groups, pad the
// last with '0', read each group as a base-2 number.
Bytes hand_pack(std::string_view text) {
  Bytes out;
  for (std::size_t i = 0; i < text.size(); i += 8) {
    std::string group(text.substr(i, 8));
    group.resize(8, '0');
    out.push_back(static_cast<std::uint8_t>(std::stoul(group, nullptr, 2)));
  }
  return out;
}

}  // namespace

TEST(Frame, WorkedExampleSequencePacking) {
  EXPECT_EQ(hand_pack(test::kRows[0].sequence), (Bytes{0x5D, 0x48}));
  const auto bytes = encode_frame({FrameKind::seq, 1, bits(test::kRows[0].sequence)});
  const Bytes expected{'U', 'P', 'A', 'D', 1, 1, 0, 0, 0, 1, 0, 0, 0, 14, 0x5D, 0x48};
  EXPECT_EQ(bytes, expected);
  const auto frame = decode_frame(bytes);
  EXPECT_EQ(frame.kind, FrameKind::seq);
  EXPECT_EQ(frame.step, 1U);
  EXPECT_EQ(frame.bits.to_string(), test::kRows[0].sequence);
}

TEST(Frame, ByteAlignedPayload) {
  const auto bytes = encode_frame({FrameKind::leaked_key, 0x01020304, bits("10000001")});
  ASSERT_EQ(bytes.size(), kHeaderSize + 1);
  EXPECT_EQ(bytes.back(), 0x81);
  EXPECT_EQ(bytes[6], 1);
  EXPECT_EQ(bytes[9], 4);
}

TEST(Frame, MatchesHandPackerOnRandomPayloads) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto payload = random_bits(1 + rng.below(100), rng);
    const auto bytes = encode_frame({FrameKind::ciphertext, 7, payload});
    const Bytes body(bytes.begin() + kHeaderSize, bytes.end());
    ASSERT_EQ(body, hand_pack(payload.to_string()));
  }
}

TEST(Frame, RoundTripProperty) {
  Rng rng(4);
  for (int i = 0; i < 10'000; ++i) {
    const Frame frame{static_cast<FrameKind>(1 + rng.below(5)), static_cast<std::uint32_t>(rng.next()),
                      random_bits(1 + rng.below(300), rng)};
    ASSERT_EQ(decode_frame(encode_frame(frame)), frame);
  }
}

TEST(Frame, DecodeErrors) {
  const auto good = encode_frame({FrameKind::seq, 1, bits(test::kRows[0].sequence)});

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(error_code([&] { (void)decode_frame(bad_magic); }), Errc::unsupported_frame);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(error_code([&] { (void)decode_frame(bad_version); }), Errc::unsupported_frame);
  auto bad_kind = good;
  bad_kind[5] = 9;
  EXPECT_EQ(error_code([&] { (void)decode_frame(bad_kind); }), Errc::unsupported_frame);

  const Bytes short_header(good.begin(), good.begin() + 10);
  EXPECT_EQ(error_code([&] { (void)decode_frame(short_header); }), Errc::incomplete_frame);
  const Bytes short_payload(good.begin(), good.end() - 1);
  EXPECT_EQ(error_code([&] { (void)decode_frame(short_payload); }), Errc::incomplete_frame);

  auto padded = good;
  padded.back() |= 0x01;
  EXPECT_EQ(error_code([&] { (void)decode_frame(padded); }), Errc::malformed_frame);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(error_code([&] { (void)decode_frame(trailing); }), Errc::malformed_frame);
  auto zero_length = good;
  zero_length[13] = 0;
  EXPECT_EQ(error_code([&] { (void)decode_frame(zero_length); }), Errc::malformed_frame);

  EXPECT_EQ(error_code([] { (void)encode_frame({FrameKind::seq, 1, BitString{}}); }), Errc::invalid_parameter);
}

TEST(MemoryChannel, EverySubscriberSeesEveryFrameInOrder) {
  MemoryChannel channel;
  auto alice = channel.subscribe();
  auto bob = channel.subscribe();
  auto eve = channel.subscribe();
  for (std::uint32_t step = 1; step <= 20; ++step) channel.broadcast({FrameKind::seq, step, bits("0110")});
  channel.close();
  const auto a = record_frames(*alice);
  ASSERT_EQ(a.size(), 20U);
  EXPECT_EQ(record_frames(*bob), a);
  EXPECT_EQ(record_frames(*eve), a);
  EXPECT_EQ(decode_frame(a[19]).step, 20U);
}

TEST(MemoryChannel, DisconnectedSubscriberSurfaces) {
  MemoryChannel channel;
  auto kept = channel.subscribe();
  {
    auto dropped = channel.subscribe();
  }
  EXPECT_EQ(error_code([&] { channel.broadcast({FrameKind::seq, 1, bits("01")}); }), Errc::delivery);
  EXPECT_NO_THROW(channel.broadcast({FrameKind::seq, 2, bits("01")}));
  channel.close();
  EXPECT_EQ(record_frames(*kept).size(), 2U);
  EXPECT_EQ(error_code([&] { channel.broadcast({FrameKind::seq, 3, bits("01")}); }), Errc::delivery);
}

TEST(SocketChannel, BroadcastReachesAllSubscribers) {
  SocketServer server({"127.0.0.1", 0});
  ASSERT_NE(server.port(), 0);
  auto alice = server.subscribe();
  auto bob = server.subscribe();
  auto eve = connect({"127.0.0.1", server.port()});
  ASSERT_TRUE(server.wait_for_subscribers(3, std::chrono::seconds(5)));
  Rng rng(1);
  std::vector<Frame> sent;
  for (std::uint32_t step = 1; step <= 50; ++step) {
    sent.push_back({FrameKind::seq, step, random_bits(1 + rng.below(64), rng)});
    server.broadcast(sent.back());
  }
  server.close();
  for (auto* sub : {alice.get(), bob.get(), eve.get()}) {
    std::vector<Frame> got;
    while (auto frame = sub->next()) got.push_back(*frame);
    EXPECT_EQ(got, sent);
  }
}

TEST(SocketChannel, DisconnectedSubscriberSurfaces) {
  SocketServer server({"127.0.0.1", 0});
  auto kept = server.subscribe();
  {
    auto dropped = server.subscribe();
  }
  bool surfaced = false;
  for (int i = 0; i < 200 && !surfaced; ++i) {
    try {
      server.broadcast({FrameKind::seq, 1, bits("0101")});
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::delivery);
      surfaced = true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  EXPECT_TRUE(surfaced);
  EXPECT_EQ(server.subscriber_count(), 1U);
}

TEST(SocketChannel, TruncatedStreamIsIncomplete) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
  ASSERT_EQ(::listen(listener, 1), 0);
  socklen_t length = sizeof(addr);
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &length);

  auto client = connect({"127.0.0.1", ntohs(addr.sin_port)});
  const int peer = ::accept(listener, nullptr, nullptr);
  const auto frame = encode_frame({FrameKind::seq, 1, bits(test::kRows[0].sequence)});
  ASSERT_EQ(::send(peer, frame.data(), frame.size() - 1, 0), static_cast<ssize_t>(frame.size() - 1));
  ::close(peer);
  ::close(listener);
  EXPECT_EQ(error_code([&] { (void)client->next_bytes(); }), Errc::incomplete_frame);
}

TEST(Endpoint, Parse) {
  const auto e = parse_endpoint("localhost:8080");
  EXPECT_EQ(e.host, "localhost");
  EXPECT_EQ(e.port, 8080);
  EXPECT_EQ(parse_endpoint(":9").host, "127.0.0.1");
  EXPECT_EQ(error_code([] { (void)parse_endpoint("nohost"); }), Errc::parse_error);
  EXPECT_EQ(error_code([] { (void)parse_endpoint("h:99999"); }), Errc::parse_error);
}

namespace {

struct SessionCapture {
  std::vector<Bytes> eve_frames;
  std::vector<protocol::FinalKeyPair> alice;
  std::vector<protocol::FinalKeyPair> bob;
};

SessionCapture run_over(Channel& channel, std::uint64_t seed, std::size_t steps) {
  Rng rng(seed);
  const auto key = random_balanced_bits(7, rng);
  auto bob_feed = channel.subscribe();
  auto eve_feed = channel.subscribe();
  protocol::SystemTwoSession bob(key, protocol::Role::bob);
  SessionCapture capture;
  std::thread bob_thread([&] { capture.bob = follow_system_two(*bob_feed, bob); });
  std::thread eve_thread([&] { capture.eve_frames = record_frames(*eve_feed); });
  capture.alice = serve_system_two(channel, key, steps, false, rng);
  channel.close();
  bob_thread.join();
  eve_thread.join();
  return capture;
}

}  // namespace

TEST(Backends, SeededSessionIsByteIdentical) {
  MemoryChannel memory;
  SocketServer socket({"127.0.0.1", 0});
  const auto in_memory = run_over(memory, 2024, 334);
  const auto over_socket = run_over(socket, 2024, 334);
  ASSERT_EQ(in_memory.eve_frames.size(), 1002U);
  EXPECT_EQ(in_memory.eve_frames, over_socket.eve_frames);
  EXPECT_EQ(in_memory.alice, in_memory.bob);
  EXPECT_EQ(over_socket.alice, over_socket.bob);
  EXPECT_EQ(in_memory.alice, over_socket.alice);

  // and the frames carry exactly the transcript of the direct run
  Rng rng(2024);
  const auto key = random_balanced_bits(7, rng);
  const auto direct = protocol::run_system_two(key, 334, false, rng);
  EXPECT_EQ(to_transcript(in_memory.eve_frames), direct.transcript);
}
