#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "upad/bits.hpp"

namespace upad::protocol {

/// Public record kinds. Numeric values double as the wire frame kind byte.
enum class RecordKind : std::uint8_t {
  seq = 1,
  seq_star = 2,
  cipher_key = 3,
  ciphertext = 4,
  leaked_key = 5,
};

[[nodiscard]] std::string_view to_string(RecordKind kind) noexcept;
[[nodiscard]] std::optional<RecordKind> record_kind_from_string(std::string_view name) noexcept;
[[nodiscard]] std::optional<RecordKind> record_kind_from_byte(std::uint8_t value) noexcept;

struct TranscriptRecord {
  std::uint32_t step = 0;
  RecordKind kind = RecordKind::seq;
  BitString payload;

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

/// Everything that crossed the public channel, one "step,kind,payload" line
/// per record. Within a step, an r-part record always precedes its p-part.
class Transcript {
public:
  void append(TranscriptRecord record) { records_.push_back(std::move(record)); }
  void append(std::uint32_t step, RecordKind kind, BitString payload) {
    records_.push_back({step, kind, std::move(payload)});
  }

  [[nodiscard]] const std::vector<TranscriptRecord>& records() const noexcept { return records_; }
  [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }

  void write(std::ostream& out) const;
  [[nodiscard]] std::string to_string() const;
  static Transcript read(std::istream& in);
  static Transcript parse(std::string_view text);

  friend bool operator==(const Transcript&, const Transcript&) = default;

private:
  std::vector<TranscriptRecord> records_;
};

}  // namespace upad::protocol
