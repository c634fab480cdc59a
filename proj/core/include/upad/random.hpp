#pragma once

#include <cstdint>
#include <random>

namespace upad {

/// Explicitly passed random source. Seeded instances are bit-reproducible
/// across platforms: only raw mt19937_64 output is consumed, never a
/// std:: distribution.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng from_os_entropy();

  std::uint64_t next() { return engine_(); }
  bool bit();
  /// Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound);

private:
  std::mt19937_64 engine_;
  std::uint64_t buffer_ = 0;
  int buffered_ = 0;
};

/// splitmix64 finalizer over (seed, index); gives each Monte Carlo trial an
/// independent stream regardless of execution order.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace upad
