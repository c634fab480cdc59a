#include "upad/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

#include "upad/error.hpp"

namespace upad::adversary {

using protocol::RecordKind;

EveView view_from_transcript(const protocol::Transcript& transcript) {
  std::map<std::uint32_t, BitString> seq;
  std::map<std::uint32_t, BitString> star;
  std::map<std::uint32_t, int> ciphertext_seen;
  std::map<std::uint32_t, int> leak_seen;
  EveView view;

  for (const auto& record : transcript.records()) {
    switch (record.kind) {
      case RecordKind::seq: seq[record.step] = record.payload; break;
      case RecordKind::seq_star: star[record.step] = record.payload; break;
      case RecordKind::cipher_key: break;
      case RecordKind::ciphertext: {
        auto& target = ciphertext_seen[record.step]++ == 0 ? view.ciphertexts_r : view.ciphertexts_p;
        target.push_back({record.step, record.payload});
        break;
      }
      case RecordKind::leaked_key: {
        auto& target = leak_seen[record.step]++ == 0 ? view.leaked_r : view.leaked_p;
        target.push_back({record.step, record.payload});
        break;
      }
    }
  }

  if (seq.empty()) throw Error(Errc::insufficient_data, "transcript has no broadcast sequences");
  const auto last = seq.rbegin()->first;
  if (seq.size() != last || seq.begin()->first != 1) {
    throw Error(Errc::insufficient_data, "transcript steps are not contiguous from 1");
  }
  for (std::uint32_t step = 1; step <= last; ++step) {
    auto it = star.find(step);
    view.sequences.push_back(it != star.end() ? it->second : seq[step]);
  }
  view.n = view.sequences.front().size() / 2;
  return view;
}

CandidateSets correlate(std::span<const BitString> sequences, std::span<const BitString> leaked) {
  if (leaked.empty()) throw Error(Errc::insufficient_data, "no leaked keys to correlate");
  if (sequences.size() != leaked.size()) {
    throw Error(Errc::length_mismatch, "each leaked key needs its broadcast sequence");
  }
  const std::size_t width = sequences.front().size();
  const std::size_t key_length = leaked.front().size();
  for (std::size_t t = 0; t < leaked.size(); ++t) {
    if (sequences[t].size() != width) throw Error(Errc::domain_mismatch, "broadcast sequences differ in length");
    if (leaked[t].size() != key_length) throw Error(Errc::length_mismatch, "leaked keys differ in length");
  }

  CandidateSets candidates(key_length);
  for (std::size_t j = 0; j < key_length; ++j) {
    for (std::size_t i = 0; i < width; ++i) {
      bool consistent = true;
      for (std::size_t t = 0; t < leaked.size() && consistent; ++t) {
        consistent = sequences[t][i] == leaked[t][j];
      }
      if (consistent) candidates[j].push_back(i + 1);
    }
  }
  return candidates;
}

namespace {

PartResult attack_part(const EveView& view, const std::vector<StepBits>& leaks) {
  std::vector<BitString> sequences;
  std::vector<BitString> keys;
  sequences.reserve(leaks.size());
  keys.reserve(leaks.size());
  for (const auto& leak : leaks) {
    if (leak.step == 0 || leak.step > view.sequences.size()) {
      throw Error(Errc::insufficient_data, "leaked key for step " + std::to_string(leak.step) + " has no sequence");
    }
    sequences.push_back(view.sequences[leak.step - 1]);
    keys.push_back(leak.bits);
  }
  return PartResult{correlate(sequences, keys), {}, false};
}

}  // namespace

AttackResult correlation_attack(const EveView& view) {
  if (view.leaked_r.empty() && view.leaked_p.empty()) {
    throw Error(Errc::insufficient_data, "eavesdropper view holds no leaked keys");
  }
  AttackResult result;
  if (!view.leaked_r.empty()) result.r = attack_part(view, view.leaked_r);
  if (!view.leaked_p.empty()) result.p = attack_part(view, view.leaked_p);
  result.observations = view.leak_count();
  return result;
}

AttackResult message_steal_attack(const EveView& view, std::span<const StolenMessage> stolen) {
  if (stolen.empty()) throw Error(Errc::insufficient_data, "no stolen messages");
  EveView derived;
  derived.n = view.n;
  derived.sequences = view.sequences;
  for (const auto& pair : stolen) {
    auto key = xor_bits(pair.ciphertext, pair.message);
    (pair.part == Part::r ? derived.leaked_r : derived.leaked_p).push_back({pair.step, std::move(key)});
  }
  return correlation_attack(derived);
}

void score(PartResult& part, const PositionKey& truth) {
  if (part.candidates.empty()) return;
  if (part.candidates.size() != truth.size()) {
    throw Error(Errc::length_mismatch, "candidate sets do not match the true position key");
  }
  part.recovered.assign(truth.size(), false);
  part.full_recovery = true;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const auto& c = part.candidates[j];
    part.recovered[j] = c.size() == 1 && c.front() == truth[j];
    part.full_recovery = part.full_recovery && part.recovered[j];
  }
}

void score(AttackResult& result, const PositionKeyPair& truth) {
  score(result.r, truth.r);
  score(result.p, truth.p);
}

std::size_t random_guess_correct(const CandidateSets& candidates, const PositionKey& truth, Rng& rng) {
  if (candidates.size() != truth.size()) {
    throw Error(Errc::length_mismatch, "candidate sets do not match the true position key");
  }
  std::size_t correct = 0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const auto& c = candidates[j];
    if (c.empty()) continue;
    const auto pick = c[static_cast<std::size_t>(rng.below(c.size()))];
    correct += pick == truth[j];
  }
  return correct;
}

bool random_guess_success(const CandidateSets& candidates, const PositionKey& truth, Rng& rng) {
  return random_guess_correct(candidates, truth, rng) == truth.size();
}

double guess_probability(std::size_t n) { return std::ldexp(1.0, -static_cast<int>(n)); }

double accidental_match_probability(std::size_t leaks) { return std::ldexp(1.0, -static_cast<int>(leaks)); }

double attack_success_formula(std::size_t n, std::size_t leaks) {
  return std::pow(1.0 - accidental_match_probability(leaks), static_cast<double>(n));
}

double balanced_key_guess_probability(std::size_t n) {
  // C(2n, n) via lgamma keeps large n finite
  const double log_count = std::lgamma(2.0 * n + 1) - 2.0 * std::lgamma(n + 1.0);
  return std::exp(-log_count);
}

void write_report(std::ostream& out, const AttackResult& result, std::size_t n) {
  out << "part,index,candidates,singleton,recovered\n";
  auto rows = [&](const char* name, const PartResult& part) {
    for (std::size_t j = 0; j < part.candidates.size(); ++j) {
      out << name << ',' << (j + 1) << ',' << part.candidates[j].size() << ','
          << (part.candidates[j].size() == 1 ? 1 : 0) << ',';
      if (!part.recovered.empty()) out << (part.recovered[j] ? 1 : 0);
      out << '\n';
    }
  };
  rows("r", result.r);
  rows("p", result.p);

  auto summary = [&](const char* name, const PartResult& part) {
    if (part.candidates.empty()) return;
    std::size_t singletons = 0;
    double total = 0;
    for (const auto& c : part.candidates) {
      singletons += c.size() == 1;
      total += static_cast<double>(c.size());
    }
    out << "# " << name << " singleton_rate=" << static_cast<double>(singletons) / part.candidates.size()
        << " mean_candidates=" << total / part.candidates.size();
    if (!part.recovered.empty()) out << " full_recovery=" << (part.full_recovery ? 1 : 0);
    out << '\n';
  };
  const auto flags = out.flags();
  out << std::fixed << std::setprecision(6);
  summary("r", result.r);
  summary("p", result.p);
  const std::size_t leaks = result.observations;
  out << "# observations=" << leaks << " n=" << n << '\n';
  out << "# formula_full_recovery=(1-2^-N)^n=" << attack_success_formula(n, leaks) << '\n';
  out << "# formula_accidental_match=2^-N=" << accidental_match_probability(leaks) << '\n';
  out << std::scientific;
  out << "# guess_probability=2^-n=" << guess_probability(n) << " balanced_key_guess=1/C(2n,n)="
      << balanced_key_guess_probability(n) << '\n';
  out.flags(flags);
}

}  // namespace upad::adversary
