#include "upad/transcript.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "upad/error.hpp"

namespace upad::protocol {

std::string_view to_string(RecordKind kind) noexcept {
  switch (kind) {
    case RecordKind::seq: return "SEQ";
    case RecordKind::seq_star: return "SEQSTAR";
    case RecordKind::cipher_key: return "CIPHERKEY";
    case RecordKind::ciphertext: return "CIPHERTEXT";
    case RecordKind::leaked_key: return "LEAKED_KEY";
  }
  return "?";
}

std::optional<RecordKind> record_kind_from_string(std::string_view name) noexcept {
  for (std::uint8_t v = 1; v <= 5; ++v) {
    const auto kind = static_cast<RecordKind>(v);
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::optional<RecordKind> record_kind_from_byte(std::uint8_t value) noexcept {
  if (value < 1 || value > 5) return std::nullopt;
  return static_cast<RecordKind>(value);
}

void Transcript::write(std::ostream& out) const {
  for (const auto& r : records_) {
    out << r.step << ',' << protocol::to_string(r.kind) << ',' << r.payload.to_string() << '\n';
  }
}

std::string Transcript::to_string() const {
  std::ostringstream out;
  write(out);
  return out.str();
}

Transcript Transcript::read(std::istream& in) {
  Transcript transcript;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = " on transcript line " + std::to_string(line_no);
    const auto first = line.find(',');
    const auto second = first == std::string::npos ? first : line.find(',', first + 1);
    if (second == std::string::npos) throw Error(Errc::parse_error, "expected step,kind,payload" + where);

    std::uint32_t step = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + first, step);
    if (ec != std::errc{} || ptr != line.data() + first) throw Error(Errc::parse_error, "bad step" + where);

    const auto kind = record_kind_from_string(std::string_view(line).substr(first + 1, second - first - 1));
    if (!kind) throw Error(Errc::parse_error, "unknown record kind" + where);

    transcript.append(step, *kind, BitString::parse(std::string_view(line).substr(second + 1)));
  }
  return transcript;
}

Transcript Transcript::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read(in);
}

}  // namespace upad::protocol
