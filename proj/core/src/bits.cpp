#include "upad/bits.hpp"

#include <algorithm>
#include <charconv>
#include <utility>

#include "upad/random.hpp"

namespace upad {

namespace {

std::string_view trim_line_end(std::string_view text) {
  if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
  if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
  return text;
}

}  // namespace

BitString::BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw Error(Errc::invalid_parameter, "bit value other than 0 or 1");
  }
}

BitString::BitString(std::initializer_list<int> bits) {
  bits_.reserve(bits.size());
  for (int b : bits) {
    if (b != 0 && b != 1) throw Error(Errc::invalid_parameter, "bit value other than 0 or 1");
    bits_.push_back(static_cast<std::uint8_t>(b));
  }
}

BitString BitString::parse(std::string_view text) {
  text = trim_line_end(text);
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') {
      throw Error(Errc::parse_error, std::string("unexpected character '") + c + "' in bitstring");
    }
    bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  BitString out;
  out.bits_ = std::move(bits);
  return out;
}

std::string BitString::to_string() const {
  std::string out(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) out[i] = static_cast<char>('0' + bits_[i]);
  return out;
}

std::uint8_t BitString::at(std::size_t index) const {
  if (index >= bits_.size()) throw Error(Errc::domain_mismatch, "bit index out of range");
  return bits_[index];
}

std::size_t BitString::count_ones() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void BitString::wipe() noexcept {
  std::fill(bits_.begin(), bits_.end(), std::uint8_t{0});
  bits_.clear();
  bits_.shrink_to_fit();
}

PositionKey::PositionKey(std::vector<std::size_t> positions, std::size_t domain_length)
    : positions_(std::move(positions)), domain_length_(domain_length) {
  if (positions_.size() > domain_length_) {
    throw Error(Errc::invalid_parameter, "more positions than the domain holds");
  }
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (positions_[i] == 0) throw Error(Errc::invalid_parameter, "positions are 1-indexed");
    if (positions_[i] > domain_length_) {
      throw Error(Errc::domain_mismatch, "position " + std::to_string(positions_[i]) +
                                             " exceeds domain length " + std::to_string(domain_length_));
    }
    if (i > 0 && positions_[i] <= positions_[i - 1]) {
      throw Error(Errc::invalid_parameter, "positions must be strictly ascending");
    }
  }
}

PositionKey PositionKey::parse(std::string_view text, std::size_t domain_length) {
  text = trim_line_end(text);
  std::vector<std::size_t> positions;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto field = text.substr(0, comma);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
      throw Error(Errc::parse_error, "bad position '" + std::string(field) + "'");
    }
    positions.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) throw Error(Errc::parse_error, "trailing comma in position key");
  }
  return PositionKey(std::move(positions), domain_length);
}

std::string PositionKey::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(positions_[i]);
  }
  return out;
}

void PositionKey::wipe() noexcept {
  std::fill(positions_.begin(), positions_.end(), std::size_t{0});
  positions_.clear();
  positions_.shrink_to_fit();
  domain_length_ = 0;
}

bool is_balanced(const BitString& bits) noexcept {
  return !bits.empty() && bits.size() % 2 == 0 && bits.count_ones() * 2 == bits.size();
}

SharedKey::SharedKey(BitString raw) : raw_(std::move(raw)) {
  if (raw_.empty()) throw Error(Errc::invalid_key, "empty key");
  if (!is_balanced(raw_)) {
    throw Error(Errc::invalid_key, "key of " + std::to_string(raw_.size()) + " bits has " +
                                       std::to_string(raw_.count_ones()) + " ones; need exactly half");
  }
}

PositionKeyPair derive_position_keys(const SharedKey& key) {
  const BitString& raw = key.raw();
  std::vector<std::size_t> ones;
  std::vector<std::size_t> zeros;
  ones.reserve(key.half_length());
  zeros.reserve(key.half_length());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    (raw[i] != 0 ? ones : zeros).push_back(i + 1);
  }
  return {PositionKey(std::move(ones), raw.size()), PositionKey(std::move(zeros), raw.size())};
}

BitString extract(const PositionKey& positions, const BitString& sequence) {
  if (positions.domain_length() != sequence.size()) {
    throw Error(Errc::domain_mismatch, "position key indexes " + std::to_string(positions.domain_length()) +
                                           " bits, sequence has " + std::to_string(sequence.size()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(positions.size());
  for (std::size_t pos : positions.positions()) out.push_back(sequence[pos - 1]);
  return BitString(std::move(out));
}

BitString concat(const BitString& head, const BitString& tail) {
  std::vector<std::uint8_t> out;
  out.reserve(head.size() + tail.size());
  out.insert(out.end(), head.bits().begin(), head.bits().end());
  out.insert(out.end(), tail.bits().begin(), tail.bits().end());
  return BitString(std::move(out));
}

BitString xor_bits(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::length_mismatch,
                "xor of " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " bits");
  }
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
  return BitString(std::move(out));
}

BitString random_bits(std::size_t length, Rng& rng) {
  std::vector<std::uint8_t> out(length);
  for (auto& b : out) b = rng.bit() ? 1 : 0;
  return BitString(std::move(out));
}

SharedKey random_balanced_bits(std::size_t half_length, Rng& rng) {
  if (half_length == 0) throw Error(Errc::invalid_parameter, "half-length must be at least 1");
  std::vector<std::uint8_t> bits(2 * half_length, 0);
  std::fill_n(bits.begin(), half_length, std::uint8_t{1});
  // Fisher-Yates
  for (std::size_t i = bits.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(bits[i], bits[j]);
  }
  return SharedKey(BitString(std::move(bits)));
}

}  // namespace upad
