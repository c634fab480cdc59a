#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "upad/bits.hpp"
#include "upad/random.hpp"
#include "upad/transcript.hpp"

namespace upad::protocol {

enum class Part : std::uint8_t { r, p };

enum class KeyKind : std::uint8_t {
  extracted_r,  // k_i^r
  extracted_p,  // k_i^p
  final_r,      // x_i^r
  final_p,      // x_i^p
};

struct KeyId {
  KeyKind kind = KeyKind::extracted_r;
  std::uint32_t step = 0;

  friend auto operator<=>(const KeyId&, const KeyId&) = default;
};

/// The three uses a generated key can be put to.
enum class Purpose : std::uint8_t { encryption, authentication_data, key_generation };

struct UsageRecord {
  KeyId id;
  Purpose purpose = Purpose::encryption;
  std::uint32_t step = 0;
};

/// Append-only record of key consumption. A key identity can be consumed once.
class UsageLedger {
public:
  void record(KeyId id, Purpose purpose, std::uint32_t step);
  [[nodiscard]] bool contains(KeyId id) const noexcept;
  [[nodiscard]] const std::vector<UsageRecord>& records() const noexcept { return records_; }

private:
  std::vector<UsageRecord> records_;
};

struct ExtractedKey {
  KeyId id;
  BitString bits;
};

// ---------------------------------------------------------------------------
// System-I: one shared key, the same pair of position keys applied to every
// broadcast sequence.

class SystemOneSession {
public:
  explicit SystemOneSession(SharedKey shared);

  struct StepKeys {
    ExtractedKey r;
    ExtractedKey p;
  };

  /// K^r : S_i :: k_i^r and K^p : S_i :: k_i^p.
  StepKeys step(const BitString& sequence);

  [[nodiscard]] std::size_t half_length() const noexcept { return shared_.half_length(); }
  [[nodiscard]] std::uint32_t step_count() const noexcept { return static_cast<std::uint32_t>(r_set_.size()); }
  [[nodiscard]] const SharedKey& shared() const noexcept { return shared_; }
  [[nodiscard]] const PositionKey& r_key() const noexcept { return keys_.r; }
  [[nodiscard]] const PositionKey& p_key() const noexcept { return keys_.p; }
  [[nodiscard]] const std::vector<BitString>& r_set() const noexcept { return r_set_; }
  [[nodiscard]] const std::vector<BitString>& p_set() const noexcept { return p_set_; }
  /// 1-indexed step.
  [[nodiscard]] ExtractedKey key(Part part, std::uint32_t step) const;

  [[nodiscard]] UsageLedger& ledger() noexcept { return ledger_; }
  [[nodiscard]] const UsageLedger& ledger() const noexcept { return ledger_; }

private:
  SharedKey shared_;
  PositionKeyPair keys_;
  std::vector<BitString> r_set_;
  std::vector<BitString> p_set_;
  UsageLedger ledger_;
};

/// Records `key` under `purpose` in `ledger` and hands back its bits.
/// A second consumption of the same identity throws one_time_violation.
BitString consume(const ExtractedKey& key, Purpose purpose, UsageLedger& ledger);

/// C = k + M, consuming the key for encryption.
BitString encrypt_message(const ExtractedKey& key, const BitString& message, UsageLedger& ledger);
/// M = k + C; the receiver's own ledger marks its copy of the key as spent.
BitString decrypt_message(const ExtractedKey& key, const BitString& ciphertext, UsageLedger& ledger);

// ---------------------------------------------------------------------------
// System-II: every step ships a fresh balanced key X_i under the one-time pad
// k_i = k_i^r .. k_i^p, and the position keys of X_i extract the final keys
// from a second broadcast S_i*. X_i and k_i are wiped as soon as the step
// completes.

enum class Role : std::uint8_t { alice, bob };

struct FinalKeyPair {
  BitString r;
  BitString p;

  friend bool operator==(const FinalKeyPair&, const FinalKeyPair&) = default;
};

struct StateInventory {
  bool shared_key = false;
  bool position_keys = false;  // cached derivation of the shared key
  std::size_t final_keys = 0;
  bool pending_attached_key = false;
  bool pending_exchanged_key = false;
};

class SystemTwoSession {
public:
  enum class Phase : std::uint8_t {
    awaiting_sequence,
    awaiting_cipher_key,  // k_i ready; A encrypts X_i, B decodes c_i
    awaiting_star_sequence,
    aborted,
  };

  SystemTwoSession(SharedKey shared, Role role);

  /// Extract and attach k_i from S_i.
  void receive_sequence(const BitString& sequence);
  /// Role A only: c_i = k_i + X_i.
  BitString encrypt_fresh_key(const SharedKey& fresh);
  /// Role B only: X_i = k_i + c_i. An unbalanced X_i aborts the session.
  void receive_cipher_key(const BitString& cipher_key);
  /// Extract x_i^r, x_i^p from S_i* and destroy k_i, X_i.
  FinalKeyPair receive_star_sequence(const BitString& star_sequence);

  /// Wipes any scratch left for a completed step. Idempotent.
  void destroy(std::uint32_t step);

  /// k_i of the step in progress. Throws destroyed_material once the step is done.
  [[nodiscard]] const BitString& attached_key(std::uint32_t step) const;
  /// X_i of the step in progress. Throws destroyed_material once the step is done.
  [[nodiscard]] const BitString& exchanged_key(std::uint32_t step) const;

  /// Releases a final key for one use. x_i^r and x_i^p are separate identities.
  BitString use_final_key(std::uint32_t step, Part part, Purpose purpose);

  [[nodiscard]] StateInventory inventory() const noexcept;
  [[nodiscard]] Phase phase() const noexcept { return phase_; }
  [[nodiscard]] Role role() const noexcept { return role_; }
  [[nodiscard]] std::size_t half_length() const noexcept { return shared_.half_length(); }
  [[nodiscard]] std::uint32_t step_count() const noexcept { return static_cast<std::uint32_t>(final_keys_.size()); }
  [[nodiscard]] const SharedKey& shared() const noexcept { return shared_; }
  [[nodiscard]] const std::vector<FinalKeyPair>& final_keys() const noexcept { return final_keys_; }
  [[nodiscard]] const UsageLedger& ledger() const noexcept { return ledger_; }

private:
  struct Pending {
    std::uint32_t step = 0;
    BitString attached;
    std::optional<BitString> exchanged;
  };

  void require_phase(Phase expected, const char* operation) const;
  void abort_session() noexcept;
  void wipe_pending() noexcept;
  const Pending& pending_for(std::uint32_t step) const;

  SharedKey shared_;
  PositionKeyPair keys_;
  Role role_;
  Phase phase_ = Phase::awaiting_sequence;
  std::optional<Pending> pending_;
  std::vector<FinalKeyPair> final_keys_;
  UsageLedger ledger_;
};

struct StepAOutput {
  BitString cipher_key;
  BitString x_r;
  BitString x_p;
};

/// One full System-II step on A's side.
StepAOutput s2_step_a(SystemTwoSession& alice, const BitString& sequence, const SharedKey& fresh,
                      const BitString& star_sequence);
/// One full System-II step on B's side.
FinalKeyPair s2_step_b(SystemTwoSession& bob, const BitString& sequence, const BitString& cipher_key,
                       const BitString& star_sequence);

// ---------------------------------------------------------------------------
// Seeded end-to-end runs. The server, A and B all live in-process; every
// public value goes through `sink` (and into the returned transcript).

using RecordSink = std::function<void(const TranscriptRecord&)>;

enum class SystemOneUsage : std::uint8_t {
  encryption,      // A sends C_i^r, C_i^p; keys stay secret
  authentication,  // k_i^r, k_i^p are revealed after use
};

struct SystemOneRun {
  Transcript transcript;
  std::vector<BitString> keys_r;
  std::vector<BitString> keys_p;
  std::vector<BitString> messages_r;  // plaintexts, encryption usage only
  std::vector<BitString> messages_p;
};

SystemOneRun run_system_one(const SharedKey& shared, std::size_t steps, SystemOneUsage usage, Rng& rng,
                            const RecordSink& sink = {});

struct SystemTwoRun {
  Transcript transcript;
  std::vector<FinalKeyPair> alice_keys;
  std::vector<FinalKeyPair> bob_keys;
  std::vector<BitString> exchanged;  // X_i, kept by the harness only for verification
};

/// `leak_final_keys` publishes x_i^r, x_i^p after use as authentication data.
SystemTwoRun run_system_two(const SharedKey& shared, std::size_t steps, bool leak_final_keys, Rng& rng,
                            const RecordSink& sink = {});

/// Drives a receiving System-II session from public records
/// (SEQ, CIPHERKEY, SEQSTAR); other kinds are ignored.
class SystemTwoFollower {
public:
  explicit SystemTwoFollower(SystemTwoSession& session);
  std::optional<FinalKeyPair> feed(const TranscriptRecord& record);

private:
  SystemTwoSession* session_;
};

/// Replays SEQ records through a System-I session.
std::vector<SystemOneSession::StepKeys> replay_system_one(const Transcript& transcript, SystemOneSession& session);
/// Replays a System-II transcript through B's session.
std::vector<FinalKeyPair> replay_system_two(const Transcript& transcript, SystemTwoSession& bob);

}  // namespace upad::protocol
