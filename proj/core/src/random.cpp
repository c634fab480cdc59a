#include "upad/random.hpp"

namespace upad {

Rng Rng::from_os_entropy() {
  std::random_device device;
  const std::uint64_t seed = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  return Rng(seed);
}

bool Rng::bit() {
  if (buffered_ == 0) {
    buffer_ = engine_();
    buffered_ = 64;
  }
  --buffered_;
  return ((buffer_ >> buffered_) & 1U) != 0;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // reject the low (2^64 mod bound) values so the modulo is unbiased
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace upad
