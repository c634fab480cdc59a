#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "upad/error.hpp"

namespace upad {

class Rng;

/// Ordered sequence of bits, leftmost bit first. Holds every key, broadcast
/// sequence, message and ciphertext in the system.
class BitString {
public:
  BitString() = default;
  explicit BitString(std::vector<std::uint8_t> bits);
  BitString(std::initializer_list<int> bits);

  /// Parses the ASCII form: '0'/'1' characters, optional trailing newline.
  static BitString parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;

  [[nodiscard]] std::size_t size() const noexcept { return bits_.size(); }
  [[nodiscard]] bool empty() const noexcept { return bits_.empty(); }
  /// 0-based access.
  [[nodiscard]] std::uint8_t operator[](std::size_t index) const noexcept { return bits_[index]; }
  [[nodiscard]] std::uint8_t at(std::size_t index) const;
  [[nodiscard]] std::size_t count_ones() const noexcept;
  [[nodiscard]] const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  /// Overwrites the storage with zeros and empties the string.
  void wipe() noexcept;

  friend bool operator==(const BitString&, const BitString&) = default;

private:
  std::vector<std::uint8_t> bits_;
};

/// Strictly ascending 1-indexed positions into a bitstring of
/// `domain_length` bits (the K^r / K^p of a balanced key).
class PositionKey {
public:
  PositionKey() = default;
  PositionKey(std::vector<std::size_t> positions, std::size_t domain_length);

  /// Parses "2,3,4,6" against a bitstring of `domain_length` bits.
  static PositionKey parse(std::string_view text, std::size_t domain_length);
  [[nodiscard]] std::string to_string() const;

  [[nodiscard]] const std::vector<std::size_t>& positions() const noexcept { return positions_; }
  [[nodiscard]] std::size_t domain_length() const noexcept { return domain_length_; }
  [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }
  [[nodiscard]] std::size_t operator[](std::size_t index) const noexcept { return positions_[index]; }

  void wipe() noexcept;

  friend bool operator==(const PositionKey&, const PositionKey&) = default;

private:
  std::vector<std::size_t> positions_;
  std::size_t domain_length_ = 0;
};

/// A 2n-bit key with exactly n ones and n zeros.
class SharedKey {
public:
  explicit SharedKey(BitString raw);

  [[nodiscard]] const BitString& raw() const noexcept { return raw_; }
  [[nodiscard]] std::size_t half_length() const noexcept { return raw_.size() / 2; }

  friend bool operator==(const SharedKey&, const SharedKey&) = default;

private:
  BitString raw_;
};

struct PositionKeyPair {
  PositionKey r;  // positions of ones
  PositionKey p;  // positions of zeros
};

[[nodiscard]] bool is_balanced(const BitString& bits) noexcept;

[[nodiscard]] PositionKeyPair derive_position_keys(const SharedKey& key);

/// Reads `sequence` at every position of `positions`, in order.
[[nodiscard]] BitString extract(const PositionKey& positions, const BitString& sequence);

/// `head` followed by `tail`; used for k_i = k_i^r .. k_i^p.
[[nodiscard]] BitString concat(const BitString& head, const BitString& tail);

/// Bitwise addition mod 2. Encrypts and decrypts.
[[nodiscard]] BitString xor_bits(const BitString& a, const BitString& b);

[[nodiscard]] BitString random_bits(std::size_t length, Rng& rng);

/// Uniform arrangement of n ones and n zeros.
[[nodiscard]] SharedKey random_balanced_bits(std::size_t half_length, Rng& rng);

}  // namespace upad
