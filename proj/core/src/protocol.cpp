#include "upad/protocol.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "upad/error.hpp"

namespace upad::protocol {

namespace {

std::string describe(KeyId id) {
  static constexpr const char* names[] = {"k^r", "k^p", "x^r", "x^p"};
  return std::string(names[static_cast<int>(id.kind)]) + " of step " + std::to_string(id.step);
}

void require_sequence_length(const BitString& sequence, std::size_t expected, const char* what) {
  if (sequence.size() != expected) {
    throw Error(Errc::domain_mismatch, std::string(what) + " has " + std::to_string(sequence.size()) +
                                           " bits, expected " + std::to_string(expected));
  }
}

}  // namespace

void UsageLedger::record(KeyId id, Purpose purpose, std::uint32_t step) {
  if (contains(id)) throw Error(Errc::one_time_violation, describe(id) + " was already used");
  records_.push_back({id, purpose, step});
}

bool UsageLedger::contains(KeyId id) const noexcept {
  return std::any_of(records_.begin(), records_.end(), [&](const UsageRecord& r) { return r.id == id; });
}

// ---------------------------------------------------------------------------

SystemOneSession::SystemOneSession(SharedKey shared)
    : shared_(std::move(shared)), keys_(derive_position_keys(shared_)) {}

SystemOneSession::StepKeys SystemOneSession::step(const BitString& sequence) {
  require_sequence_length(sequence, shared_.raw().size(), "broadcast sequence");
  const auto index = step_count() + 1;
  StepKeys out{{{KeyKind::extracted_r, index}, extract(keys_.r, sequence)},
               {{KeyKind::extracted_p, index}, extract(keys_.p, sequence)}};
  r_set_.push_back(out.r.bits);
  p_set_.push_back(out.p.bits);
  return out;
}

ExtractedKey SystemOneSession::key(Part part, std::uint32_t step) const {
  if (step == 0 || step > step_count()) {
    throw Error(Errc::invalid_parameter, "no extracted key for step " + std::to_string(step));
  }
  if (part == Part::r) return {{KeyKind::extracted_r, step}, r_set_[step - 1]};
  return {{KeyKind::extracted_p, step}, p_set_[step - 1]};
}

BitString consume(const ExtractedKey& key, Purpose purpose, UsageLedger& ledger) {
  ledger.record(key.id, purpose, key.id.step);
  return key.bits;
}

BitString encrypt_message(const ExtractedKey& key, const BitString& message, UsageLedger& ledger) {
  if (key.bits.size() != message.size()) {
    throw Error(Errc::length_mismatch, "message of " + std::to_string(message.size()) + " bits for a " +
                                           std::to_string(key.bits.size()) + "-bit key");
  }
  return xor_bits(consume(key, Purpose::encryption, ledger), message);
}

BitString decrypt_message(const ExtractedKey& key, const BitString& ciphertext, UsageLedger& ledger) {
  return encrypt_message(key, ciphertext, ledger);
}

// ---------------------------------------------------------------------------

SystemTwoSession::SystemTwoSession(SharedKey shared, Role role)
    : shared_(std::move(shared)), keys_(derive_position_keys(shared_)), role_(role) {}

void SystemTwoSession::require_phase(Phase expected, const char* operation) const {
  if (phase_ == Phase::aborted) throw Error(Errc::protocol_corruption, "session aborted");
  if (phase_ != expected) throw Error(Errc::protocol_state, std::string(operation) + " out of order");
}

void SystemTwoSession::wipe_pending() noexcept {
  if (!pending_) return;
  pending_->attached.wipe();
  if (pending_->exchanged) pending_->exchanged->wipe();
  pending_.reset();
}

void SystemTwoSession::abort_session() noexcept {
  wipe_pending();
  phase_ = Phase::aborted;
}

void SystemTwoSession::receive_sequence(const BitString& sequence) {
  require_phase(Phase::awaiting_sequence, "sequence");
  require_sequence_length(sequence, shared_.raw().size(), "broadcast sequence");
  pending_ = Pending{step_count() + 1, concat(extract(keys_.r, sequence), extract(keys_.p, sequence)), {}};
  phase_ = Phase::awaiting_cipher_key;
}

BitString SystemTwoSession::encrypt_fresh_key(const SharedKey& fresh) {
  if (role_ != Role::alice) throw Error(Errc::protocol_state, "only A generates the fresh key");
  require_phase(Phase::awaiting_cipher_key, "fresh key");
  if (fresh.half_length() != half_length()) {
    throw Error(Errc::invalid_key, "fresh key must have " + std::to_string(2 * half_length()) + " bits");
  }
  pending_->exchanged = fresh.raw();
  phase_ = Phase::awaiting_star_sequence;
  return xor_bits(pending_->attached, fresh.raw());
}

void SystemTwoSession::receive_cipher_key(const BitString& cipher_key) {
  if (role_ != Role::bob) throw Error(Errc::protocol_state, "only B decodes the cipher key");
  require_phase(Phase::awaiting_cipher_key, "cipher key");
  require_sequence_length(cipher_key, shared_.raw().size(), "cipher key");
  BitString decoded = xor_bits(pending_->attached, cipher_key);
  if (!is_balanced(decoded)) {
    decoded.wipe();
    abort_session();
    throw Error(Errc::protocol_corruption, "decoded fresh key is unbalanced (tampering or mismatched shared key)");
  }
  pending_->exchanged = std::move(decoded);
  phase_ = Phase::awaiting_star_sequence;
}

FinalKeyPair SystemTwoSession::receive_star_sequence(const BitString& star_sequence) {
  require_phase(Phase::awaiting_star_sequence, "star sequence");
  require_sequence_length(star_sequence, shared_.raw().size(), "star sequence");
  auto fresh_keys = derive_position_keys(SharedKey(*pending_->exchanged));
  FinalKeyPair out{extract(fresh_keys.r, star_sequence), extract(fresh_keys.p, star_sequence)};
  fresh_keys.r.wipe();
  fresh_keys.p.wipe();
  final_keys_.push_back(out);
  phase_ = Phase::awaiting_sequence;
  destroy(step_count());
  return out;
}

void SystemTwoSession::destroy(std::uint32_t step) {
  if (step == 0 || step > step_count()) {
    throw Error(Errc::protocol_state, "step " + std::to_string(step) + " has not completed");
  }
  if (pending_ && pending_->step == step) wipe_pending();
}

const SystemTwoSession::Pending& SystemTwoSession::pending_for(std::uint32_t step) const {
  if (pending_ && pending_->step == step) return *pending_;
  if (step >= 1 && (step <= step_count() || phase_ == Phase::aborted)) {
    throw Error(Errc::destroyed_material, "material of step " + std::to_string(step) + " was destroyed");
  }
  throw Error(Errc::protocol_state, "step " + std::to_string(step) + " has not started");
}

const BitString& SystemTwoSession::attached_key(std::uint32_t step) const { return pending_for(step).attached; }

const BitString& SystemTwoSession::exchanged_key(std::uint32_t step) const {
  const auto& pending = pending_for(step);
  if (!pending.exchanged) throw Error(Errc::protocol_state, "fresh key of step " + std::to_string(step) + " not yet exchanged");
  return *pending.exchanged;
}

BitString SystemTwoSession::use_final_key(std::uint32_t step, Part part, Purpose purpose) {
  if (step == 0 || step > step_count()) {
    throw Error(Errc::invalid_parameter, "no final key for step " + std::to_string(step));
  }
  const KeyId id{part == Part::r ? KeyKind::final_r : KeyKind::final_p, step};
  ledger_.record(id, purpose, step_count());
  const auto& pair = final_keys_[step - 1];
  return part == Part::r ? pair.r : pair.p;
}

StateInventory SystemTwoSession::inventory() const noexcept {
  return {!shared_.raw().empty(), keys_.r.size() + keys_.p.size() == shared_.raw().size(), final_keys_.size(),
          pending_.has_value(), pending_ && pending_->exchanged.has_value()};
}

StepAOutput s2_step_a(SystemTwoSession& alice, const BitString& sequence, const SharedKey& fresh,
                      const BitString& star_sequence) {
  alice.receive_sequence(sequence);
  auto cipher_key = alice.encrypt_fresh_key(fresh);
  auto finals = alice.receive_star_sequence(star_sequence);
  return {std::move(cipher_key), std::move(finals.r), std::move(finals.p)};
}

FinalKeyPair s2_step_b(SystemTwoSession& bob, const BitString& sequence, const BitString& cipher_key,
                       const BitString& star_sequence) {
  bob.receive_sequence(sequence);
  bob.receive_cipher_key(cipher_key);
  return bob.receive_star_sequence(star_sequence);
}

// ---------------------------------------------------------------------------

namespace {

class Publisher {
public:
  explicit Publisher(const RecordSink& sink) : sink_(sink) {}

  void operator()(std::uint32_t step, RecordKind kind, const BitString& payload) {
    transcript.append(step, kind, payload);
    if (sink_) sink_(transcript.records().back());
  }

  Transcript transcript;

private:
  const RecordSink& sink_;
};

}  // namespace

SystemOneRun run_system_one(const SharedKey& shared, std::size_t steps, SystemOneUsage usage, Rng& rng,
                            const RecordSink& sink) {
  SystemOneSession alice(shared);
  SystemOneSession bob(shared);
  const std::size_t n = shared.half_length();
  Publisher publish(sink);
  SystemOneRun run;

  for (std::size_t i = 0; i < steps; ++i) {
    const auto sequence = random_bits(2 * n, rng);
    const auto step = static_cast<std::uint32_t>(i + 1);
    publish(step, RecordKind::seq, sequence);

    auto a_keys = alice.step(sequence);
    auto b_keys = bob.step(sequence);
    if (a_keys.r.bits != b_keys.r.bits || a_keys.p.bits != b_keys.p.bits) {
      throw Error(Errc::protocol_corruption, "A and B disagree at step " + std::to_string(step));
    }

    if (usage == SystemOneUsage::encryption) {
      auto message_r = random_bits(n, rng);
      auto message_p = random_bits(n, rng);
      const auto cipher_r = encrypt_message(a_keys.r, message_r, alice.ledger());
      const auto cipher_p = encrypt_message(a_keys.p, message_p, alice.ledger());
      publish(step, RecordKind::ciphertext, cipher_r);
      publish(step, RecordKind::ciphertext, cipher_p);
      if (decrypt_message(b_keys.r, cipher_r, bob.ledger()) != message_r ||
          decrypt_message(b_keys.p, cipher_p, bob.ledger()) != message_p) {
        throw Error(Errc::protocol_corruption, "B failed to decrypt at step " + std::to_string(step));
      }
      run.messages_r.push_back(std::move(message_r));
      run.messages_p.push_back(std::move(message_p));
    } else {
      publish(step, RecordKind::leaked_key, consume(a_keys.r, Purpose::authentication_data, alice.ledger()));
      publish(step, RecordKind::leaked_key, consume(a_keys.p, Purpose::authentication_data, alice.ledger()));
    }
    run.keys_r.push_back(std::move(a_keys.r.bits));
    run.keys_p.push_back(std::move(a_keys.p.bits));
  }
  run.transcript = std::move(publish.transcript);
  return run;
}

SystemTwoRun run_system_two(const SharedKey& shared, std::size_t steps, bool leak_final_keys, Rng& rng,
                            const RecordSink& sink) {
  SystemTwoSession alice(shared, Role::alice);
  SystemTwoSession bob(shared, Role::bob);
  const std::size_t n = shared.half_length();
  Publisher publish(sink);
  SystemTwoRun run;

  for (std::size_t i = 0; i < steps; ++i) {
    const auto step = static_cast<std::uint32_t>(i + 1);
    const auto sequence = random_bits(2 * n, rng);
    publish(step, RecordKind::seq, sequence);
    alice.receive_sequence(sequence);
    bob.receive_sequence(sequence);

    const auto fresh = random_balanced_bits(n, rng);
    const auto cipher_key = alice.encrypt_fresh_key(fresh);
    publish(step, RecordKind::cipher_key, cipher_key);
    bob.receive_cipher_key(cipher_key);

    const auto star = random_bits(2 * n, rng);
    publish(step, RecordKind::seq_star, star);
    run.alice_keys.push_back(alice.receive_star_sequence(star));
    run.bob_keys.push_back(bob.receive_star_sequence(star));
    run.exchanged.push_back(fresh.raw());

    if (leak_final_keys) {
      publish(step, RecordKind::leaked_key, alice.use_final_key(step, Part::r, Purpose::authentication_data));
      publish(step, RecordKind::leaked_key, alice.use_final_key(step, Part::p, Purpose::authentication_data));
    }
  }
  run.transcript = std::move(publish.transcript);
  return run;
}

SystemTwoFollower::SystemTwoFollower(SystemTwoSession& session) : session_(&session) {}

std::optional<FinalKeyPair> SystemTwoFollower::feed(const TranscriptRecord& record) {
  const auto expected = session_->step_count() + 1;
  switch (record.kind) {
    case RecordKind::seq:
    case RecordKind::cipher_key:
    case RecordKind::seq_star:
      if (record.step != expected) {
        throw Error(Errc::protocol_state, "record for step " + std::to_string(record.step) + " while expecting step " +
                                              std::to_string(expected));
      }
      break;
    default:
      return std::nullopt;
  }
  if (record.kind == RecordKind::seq) {
    session_->receive_sequence(record.payload);
    return std::nullopt;
  }
  if (record.kind == RecordKind::cipher_key) {
    session_->receive_cipher_key(record.payload);
    return std::nullopt;
  }
  return session_->receive_star_sequence(record.payload);
}

std::vector<SystemOneSession::StepKeys> replay_system_one(const Transcript& transcript, SystemOneSession& session) {
  std::vector<SystemOneSession::StepKeys> out;
  for (const auto& record : transcript.records()) {
    if (record.kind != RecordKind::seq) continue;
    if (record.step != session.step_count() + 1) {
      throw Error(Errc::protocol_state, "sequence for step " + std::to_string(record.step) + " out of order");
    }
    out.push_back(session.step(record.payload));
  }
  return out;
}

std::vector<FinalKeyPair> replay_system_two(const Transcript& transcript, SystemTwoSession& bob) {
  SystemTwoFollower follower(bob);
  std::vector<FinalKeyPair> out;
  for (const auto& record : transcript.records()) {
    if (auto finals = follower.feed(record)) out.push_back(std::move(*finals));
  }
  return out;
}

}  // namespace upad::protocol
