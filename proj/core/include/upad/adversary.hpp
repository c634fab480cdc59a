#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "upad/bits.hpp"
#include "upad/protocol.hpp"
#include "upad/random.hpp"
#include "upad/transcript.hpp"

namespace upad::adversary {

using protocol::Part;

struct StepBits {
  std::uint32_t step = 0;
  BitString bits;
};

/// Everything Eve has seen. `sequences[t - 1]` is the broadcast that step t's
/// leaked keys were extracted from.
struct EveView {
  std::size_t n = 0;
  std::vector<BitString> sequences;
  std::vector<StepBits> ciphertexts_r;
  std::vector<StepBits> ciphertexts_p;
  std::vector<StepBits> leaked_r;
  std::vector<StepBits> leaked_p;

  [[nodiscard]] std::size_t leak_count() const noexcept { return std::max(leaked_r.size(), leaked_p.size()); }
};

/// Builds Eve's view of a transcript. Leaked keys of a step are aligned with
/// that step's SEQSTAR when one exists (System-II final keys), else with SEQ.
[[nodiscard]] EveView view_from_transcript(const protocol::Transcript& transcript);

/// Candidate positions (1-indexed, ascending) per key index.
using CandidateSets = std::vector<std::vector<std::size_t>>;

struct PartResult {
  CandidateSets candidates;
  std::vector<bool> recovered;  // filled by score(); empty until then
  bool full_recovery = false;

  friend bool operator==(const PartResult&, const PartResult&) = default;
};

struct AttackResult {
  PartResult r;
  PartResult p;
  std::size_t observations = 0;

  friend bool operator==(const AttackResult&, const AttackResult&) = default;
};

/// For each key index j, the positions i whose column S_1[i] .. S_N[i] equals
/// the j-th bits of the N leaked keys.
[[nodiscard]] CandidateSets correlate(std::span<const BitString> sequences, std::span<const BitString> leaked);

/// Runs `correlate` on each part that has leaks.
[[nodiscard]] AttackResult correlation_attack(const EveView& view);

struct StolenMessage {
  std::uint32_t step = 0;
  Part part = Part::r;
  BitString ciphertext;
  BitString message;
};

/// Recovers k = C + M for every stolen pair, then runs the correlation attack.
[[nodiscard]] AttackResult message_steal_attack(const EveView& view, std::span<const StolenMessage> stolen);

/// Marks recovered indices against the true position keys (strict singleton).
void score(AttackResult& result, const PositionKeyPair& truth);
void score(PartResult& part, const PositionKey& truth);

/// Picks one candidate uniformly per index and counts picks that hit the
/// true position.
[[nodiscard]] std::size_t random_guess_correct(const CandidateSets& candidates, const PositionKey& truth, Rng& rng);
/// True iff every random pick is the true position.
[[nodiscard]] bool random_guess_success(const CandidateSets& candidates, const PositionKey& truth, Rng& rng);

// Closed forms as stated for the scheme.

/// 2^-n.
[[nodiscard]] double guess_probability(std::size_t n);
/// (1 - 2^-N)^n.
[[nodiscard]] double attack_success_formula(std::size_t n, std::size_t leaks);
/// 2^-N.
[[nodiscard]] double accidental_match_probability(std::size_t leaks);
/// 1 / C(2n, n): guessing a balanced key uniformly.
[[nodiscard]] double balanced_key_guess_probability(std::size_t n);

/// Line-oriented report: one "part,index,candidates,singleton[,recovered]"
/// row per index followed by summary lines.
void write_report(std::ostream& out, const AttackResult& result, std::size_t n);

}  // namespace upad::adversary
