#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace upad::harness {

enum class RecoveryMode : std::uint8_t {
  strict_singleton,  // every candidate set is exactly {true position}
  random_guess,      // Eve picks one candidate per index uniformly
};

[[nodiscard]] std::string to_string(RecoveryMode mode);
[[nodiscard]] RecoveryMode recovery_mode_from_string(const std::string& name);

struct ExperimentConfig {
  std::size_t n = 7;
  std::size_t leaks = 0;  // N: extracted r-keys revealed to Eve
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  RecoveryMode mode = RecoveryMode::strict_singleton;

  void validate() const;
};

struct Interval {
  double low = 0;
  double high = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t successes = 0;
  double measured_rate = 0;
  Interval confidence_interval;
  double formula_rate = 0;
  double per_position_rate = 0;
  std::optional<double> exact_rate;
};

/// Two-sided 99% normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

/// Wilson score interval for `successes` out of `trials`.
[[nodiscard]] Interval score_interval(std::size_t successes, std::size_t trials, double z = kZ99);

/// Default enumeration budget: total sequence bits 2n*N.
inline constexpr std::size_t kEnumerationBudgetBits = 24;

/// Monte Carlo estimate of Eve's full-recovery rate against System-I with
/// authentication-style leakage of N extracted r-keys. Each trial draws a
/// fresh balanced K and N uniform sequences from its own sub-seed, so the
/// report does not depend on `threads`.
[[nodiscard]] ExperimentReport run_attack_experiment(const ExperimentConfig& config, unsigned threads = 0);

/// Exact full-recovery probability by enumerating every tuple of N
/// sequences of 2n bits. The true positions are fixed to {1..n}: with
/// uniform sequences the column statistics do not depend on which positions
/// K selects, so one representative key suffices.
[[nodiscard]] double exact_attack_probability(std::size_t n, std::size_t leaks,
                                              RecoveryMode mode = RecoveryMode::strict_singleton,
                                              std::size_t budget_bits = kEnumerationBudgetBits);

struct ColumnMatchReport {
  std::size_t leaks = 0;
  std::size_t trials = 0;
  std::size_t matches = 0;
  double rate = 0;
  double expected = 0;  // 2^-N
  double sigma = 0;     // binomial standard deviation of `rate`
};

/// Rate at which one designated wrong position (the first zero of K) agrees
/// with the leaked bits of key index 1 across all N observations.
[[nodiscard]] ColumnMatchReport run_accidental_match_experiment(std::size_t n, std::size_t leaks, std::size_t trials,
                                                                std::uint64_t seed);

[[nodiscard]] std::vector<ExperimentReport> sweep(const std::vector<ExperimentConfig>& configs, unsigned threads = 0);

/// Header plus one row per report; rates carry six fractional digits.
void write_csv(std::ostream& out, const std::vector<ExperimentReport>& reports);
[[nodiscard]] std::string sweep_csv(const std::vector<ExperimentConfig>& configs, unsigned threads = 0);

/// Parses "a..b" or "a,b,c" or a single value into a list of counts.
[[nodiscard]] std::vector<std::size_t> parse_count_list(const std::string& text);

/// key=value lines (n, N, trials, seed, mode; '#' comments). n and N accept
/// lists and ranges; the result is their cross product, n-major.
[[nodiscard]] std::vector<ExperimentConfig> parse_config(std::istream& in);

}  // namespace upad::harness
