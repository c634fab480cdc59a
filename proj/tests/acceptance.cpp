// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "worked_example.hpp"
#include "upad/adversary.hpp"
#include "upad/bits.hpp"
#include "upad/error.hpp"
#include "upad/harness.hpp"
#include "upad/protocol.hpp"
#include "upad/transport.hpp"

using namespace upad;
using protocol::Part;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), fmt, args...);
  return buffer;
}

template <typename F>
bool throws_code(F&& f, Errc code) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

Outcome worked_example() {
  const SharedKey key(BitString::parse(test::kKey));
  const auto keys = derive_position_keys(key);
  if (keys.r.to_string() != test::kPositionsR || keys.p.to_string() != test::kPositionsP) {
    return {false, "position keys " + keys.r.to_string() + " / " + keys.p.to_string()};
  }
  for (const auto& row : test::kRows) {
    const auto sequence = BitString::parse(row.sequence);
    if (extract(keys.r, sequence).to_string() != row.key_r || extract(keys.p, sequence).to_string() != row.key_p) {
      return {false, "mismatch on sequence " + std::string(row.sequence)};
    }
  }
  return {true, format("K^r, K^p and %zu extractions exact", std::size(test::kRows))};
}

Outcome one_time_pad_round_trip() {
  Rng rng(101);
  std::size_t pairs = 0;
  for (const std::size_t n : {1, 7, 64}) {
    for (int i = 0; i < 10'000; ++i) {
      const auto key = random_balanced_bits(n, rng);
      protocol::SystemOneSession alice{SharedKey(key)};
      protocol::SystemOneSession bob{SharedKey(key)};
      const auto sequence = random_bits(2 * n, rng);
      const auto sent = alice.step(sequence);
      const auto received = bob.step(sequence);
      for (const Part part : {Part::r, Part::p}) {
        const auto& a = part == Part::r ? sent.r : sent.p;
        const auto& b = part == Part::r ? received.r : received.p;
        const auto message = random_bits(n, rng);
        const auto cipher = protocol::encrypt_message(a, message, alice.ledger());
        if (protocol::decrypt_message(b, cipher, bob.ledger()) != message) {
          return {false, format("round trip failed at n=%zu", n)};
        }
        if (!throws_code([&] { (void)protocol::encrypt_message(a, message, alice.ledger()); },
                         Errc::one_time_violation)) {
          return {false, format("key reuse accepted at n=%zu", n)};
        }
        ++pairs;
      }
    }
  }
  return {true, format("%zu message pairs, n in {1,7,64}, reuse rejected", pairs)};
}

Outcome system_two_agreement() {
  Rng rng(202);
  const std::size_t n = 7;
  const auto key = random_balanced_bits(n, rng);
  const auto run = protocol::run_system_two(key, 100, false, rng);
  if (run.alice_keys != run.bob_keys) return {false, "seeded run disagrees"};

  protocol::SystemTwoSession alice(key, protocol::Role::alice);
  protocol::SystemTwoSession bob(key, protocol::Role::bob);
  for (std::uint32_t step = 1; step <= 100; ++step) {
    const auto sequence = random_bits(2 * n, rng);
    const SharedKey fresh(random_balanced_bits(n, rng));
    const auto star = random_bits(2 * n, rng);
    const auto a = protocol::s2_step_a(alice, sequence, fresh, star);
    const auto b = protocol::s2_step_b(bob, sequence, a.cipher_key, star);
    if (a.x_r != b.r || a.x_p != b.p) return {false, format("step %u keys differ", step)};
    for (auto* session : {&alice, &bob}) {
      const auto inventory = session->inventory();
      if (inventory.pending_attached_key || inventory.pending_exchanged_key) {
        return {false, format("step %u left intermediates", step)};
      }
      if (!throws_code([&] { (void)session->attached_key(step); }, Errc::destroyed_material) ||
          !throws_code([&] { (void)session->exchanged_key(step); }, Errc::destroyed_material)) {
        return {false, format("step %u intermediates readable", step)};
      }
    }
    (void)alice.use_final_key(step, Part::r, protocol::Purpose::encryption);
    if (!throws_code([&] { (void)alice.use_final_key(step, Part::r, protocol::Purpose::authentication_data); },
                     Errc::one_time_violation)) {
      return {false, format("step %u final key reused", step)};
    }
  }
  return {true, "100 steps agree, k_i and X_i destroyed, final-key reuse rejected"};
}

Outcome accidental_match() {
  std::string detail;
  bool pass = true;
  for (const std::size_t leaks : {1, 2, 3, 5, 8}) {
    const auto report = harness::run_accidental_match_experiment(7, leaks, 100'000, 300 + leaks);
    const double deviation = std::abs(report.rate - report.expected) / report.sigma;
    pass = pass && deviation <= 3.0;
    detail += format("N=%zu %.5f vs %.5f (%.1f sd) ", leaks, report.rate, report.expected, deviation);
  }
  return {pass, detail};
}

Outcome oracle_agreement() {
  std::string detail;
  bool pass = true;
  const std::vector<std::pair<std::size_t, std::size_t>> cases{{1, 1}, {1, 2}, {2, 1}, {2, 2}, {2, 3}};
  for (const auto& [n, leaks] : cases) {
    harness::ExperimentConfig config;
    config.n = n;
    config.leaks = leaks;
    config.trials = 100'000;
    config.seed = 400 + 10 * n + leaks;
    const auto report = harness::run_attack_experiment(config);
    const double exact = harness::exact_attack_probability(n, leaks);
    const auto& ci = report.confidence_interval;
    pass = pass && ci.low <= exact && exact <= ci.high;
    detail += format("(%zu,%zu) %.4f~%.4f ", n, leaks, report.measured_rate, exact);
  }
  return {pass, detail};
}

Outcome sweep_trend() {
  std::vector<harness::ExperimentConfig> configs;
  for (std::size_t leaks = 0; leaks <= 20; ++leaks) {
    harness::ExperimentConfig config;
    config.n = 7;
    config.leaks = leaks;
    config.trials = 10'000;
    config.seed = 500;
    configs.push_back(config);
  }
  const auto reports = harness::sweep(configs);
  if (reports.front().measured_rate != 0.0) return {false, "N=0 rate is not zero"};
  for (std::size_t i = 1; i < reports.size(); ++i) {
    // non-decreasing within noise: the next rate may not fall below this one's interval
    if (reports[i].measured_rate < reports[i - 1].confidence_interval.low) {
      return {false, format("rate drops at N=%zu", i)};
    }
  }
  const auto& last = reports.back();
  if (last.measured_rate < 0.999 || last.formula_rate < 0.999) {
    return {false, format("N=20 measured %.5f formula %.5f", last.measured_rate, last.formula_rate)};
  }
  return {true, format("N=0 0.0, N=5 %.4f, N=10 %.4f, N=20 %.5f (formula %.5f)", reports[5].measured_rate,
                       reports[10].measured_rate, last.measured_rate, last.formula_rate)};
}

Outcome message_steal_equivalence() {
  Rng rng(700);
  for (int session = 0; session < 100; ++session) {
    const std::size_t n = 1 + rng.below(10);
    const std::size_t steps = 1 + rng.below(16);
    const auto key = random_balanced_bits(n, rng);
    const auto run = protocol::run_system_one(key, steps, protocol::SystemOneUsage::encryption, rng);
    const auto view = adversary::view_from_transcript(run.transcript);
    std::vector<adversary::StolenMessage> stolen;
    auto leaked = view;
    for (std::size_t t = 0; t < steps; ++t) {
      const auto step = static_cast<std::uint32_t>(t + 1);
      stolen.push_back({step, Part::r, view.ciphertexts_r[t].bits, run.messages_r[t]});
      stolen.push_back({step, Part::p, view.ciphertexts_p[t].bits, run.messages_p[t]});
      leaked.leaked_r.push_back({step, run.keys_r[t]});
      leaked.leaked_p.push_back({step, run.keys_p[t]});
    }
    if (!(adversary::message_steal_attack(view, stolen) == adversary::correlation_attack(leaked))) {
      return {false, format("session %d differs", session)};
    }
  }
  return {true, "100 sessions, stolen plaintexts give the same candidate sets as leaked keys"};
}

Outcome system_two_final_leak() {
  const std::size_t n = 7;
  const std::size_t trials = 10'000;
  Rng rng(800);
  double candidate_total = 0;
  std::size_t indices = 0;
  std::size_t full = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto key = random_balanced_bits(n, rng);
    const auto run = protocol::run_system_two(key, 1, true, rng);
    auto result = adversary::correlation_attack(adversary::view_from_transcript(run.transcript));
    adversary::score(result, derive_position_keys(SharedKey(run.exchanged[0])));
    for (const auto* part : {&result.r, &result.p}) {
      for (const auto& set : part->candidates) candidate_total += static_cast<double>(set.size());
      indices += part->candidates.size();
      full += part->full_recovery ? 1 : 0;
    }
  }
  const double mean = candidate_total / static_cast<double>(indices);
  // one observation of 2n uniform columns: the true column plus each of the
  // other 2n-1 matching with probability 1/2
  const double expected = static_cast<double>(n) + 0.5;
  const bool pass = full == 0 && std::abs(mean - expected) < 0.05 && mean >= static_cast<double>(n) &&
                    mean <= static_cast<double>(n) + 1;
  return {pass, format("mean candidates %.4f (expected %.1f), full recoveries %zu of %zu", mean, expected, full,
                       2 * trials)};
}

std::vector<transport::Bytes> eve_frames_over(transport::Channel& channel, std::uint64_t seed, std::size_t steps,
                                              bool& agreed) {
  Rng rng(seed);
  const auto key = random_balanced_bits(7, rng);
  auto bob_feed = channel.subscribe();
  auto eve_feed = channel.subscribe();
  protocol::SystemTwoSession bob(key, protocol::Role::bob);
  std::vector<protocol::FinalKeyPair> bob_keys;
  std::vector<transport::Bytes> frames;
  std::thread bob_thread([&] { bob_keys = transport::follow_system_two(*bob_feed, bob); });
  std::thread eve_thread([&] { frames = transport::record_frames(*eve_feed); });
  const auto alice_keys = transport::serve_system_two(channel, key, steps, false, rng);
  channel.close();
  bob_thread.join();
  eve_thread.join();
  agreed = alice_keys == bob_keys;
  return frames;
}

Outcome wire_format() {
  Rng rng(900);
  for (int i = 0; i < 10'000; ++i) {
    const transport::Frame frame{static_cast<transport::FrameKind>(1 + rng.below(5)),
                                 static_cast<std::uint32_t>(rng.next()), random_bits(1 + rng.below(256), rng)};
    if (!(transport::decode_frame(transport::encode_frame(frame)) == frame)) return {false, "round trip failed"};
  }
  const auto packed = transport::encode_frame({transport::FrameKind::seq, 1, BitString::parse(test::kRows[0].sequence)});
  if (packed.size() != transport::kHeaderSize + 2 || packed[transport::kHeaderSize] != 0x5D ||
      packed[transport::kHeaderSize + 1] != 0x48) {
    return {false, "S_1 payload is not 0x5D 0x48"};
  }
  transport::MemoryChannel memory;
  transport::SocketServer socket({"127.0.0.1", 0});
  bool memory_agreed = false;
  bool socket_agreed = false;
  const auto in_memory = eve_frames_over(memory, 901, 334, memory_agreed);
  const auto over_socket = eve_frames_over(socket, 901, 334, socket_agreed);
  if (!memory_agreed || !socket_agreed) return {false, "A and B disagree over a backend"};
  if (in_memory != over_socket) return {false, "socket and memory frames differ"};
  return {true, format("10000 frames round trip, S_1 -> 0x5D 0x48, %zu frames identical over socket and memory",
                       in_memory.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"worked example", worked_example},
      {"one-time-pad round trip", one_time_pad_round_trip},
      {"system-II agreement and destruction", system_two_agreement},
      {"accidental column match", accidental_match},
      {"simulation vs exact oracle", oracle_agreement},
      {"recovery sweep n=7 N=0..20", sweep_trend},
      {"message stealing equals key leakage", message_steal_equivalence},
      {"system-II final-key leakage", system_two_final_leak},
      {"wire format and backends", wire_format},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += outcome.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", outcome.pass ? "PASS" : "FAIL", index, name, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", index - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
