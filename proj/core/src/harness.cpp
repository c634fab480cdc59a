#include "upad/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "upad/adversary.hpp"
#include "upad/bits.hpp"
#include "upad/error.hpp"
#include "upad/protocol.hpp"
#include "upad/random.hpp"

namespace upad::harness {

std::string to_string(RecoveryMode mode) {
  return mode == RecoveryMode::strict_singleton ? "strict" : "random-guess";
}

RecoveryMode recovery_mode_from_string(const std::string& name) {
  if (name == "strict" || name == "strict-singleton") return RecoveryMode::strict_singleton;
  if (name == "random-guess" || name == "guess") return RecoveryMode::random_guess;
  throw Error(Errc::invalid_parameter, "unknown recovery mode '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (n == 0) throw Error(Errc::invalid_parameter, "n must be at least 1");
  if (trials == 0) throw Error(Errc::invalid_parameter, "trials must be at least 1");
}

Interval score_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double t = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / t;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * t)) / (1 + z2 / t);
  const double half = z / (1 + z2 / t) * std::sqrt(p * (1 - p) / t + z2 / (4 * t * t));
  // the exact interval touches p at the extremes; keep it bracketing p after rounding
  return {std::clamp(centre - half, 0.0, p), std::clamp(centre + half, p, 1.0)};
}

namespace {

struct Tally {
  std::size_t successes = 0;
  std::size_t positions = 0;
};

Tally run_trial(const ExperimentConfig& config, std::uint64_t index) {
  Rng rng(derive_seed(config.seed, index));
  protocol::SystemOneSession session(random_balanced_bits(config.n, rng));

  adversary::EveView view;
  view.n = config.n;
  for (std::size_t t = 0; t < config.leaks; ++t) {
    auto sequence = random_bits(2 * config.n, rng);
    auto keys = session.step(sequence);
    view.sequences.push_back(std::move(sequence));
    view.leaked_r.push_back(
        {keys.r.id.step, protocol::consume(keys.r, protocol::Purpose::authentication_data, session.ledger())});
  }

  adversary::CandidateSets candidates;
  if (config.leaks == 0) {
    std::vector<std::size_t> everything(2 * config.n);
    for (std::size_t i = 0; i < everything.size(); ++i) everything[i] = i + 1;
    candidates.assign(config.n, everything);
  } else {
    candidates = adversary::correlation_attack(view).r.candidates;
  }

  if (config.mode == RecoveryMode::strict_singleton) {
    adversary::PartResult part{std::move(candidates), {}, false};
    adversary::score(part, session.r_key());
    return {part.full_recovery ? 1U : 0U,
            static_cast<std::size_t>(std::count(part.recovered.begin(), part.recovered.end(), true))};
  }
  const auto correct = adversary::random_guess_correct(candidates, session.r_key(), rng);
  return {correct == config.n ? 1U : 0U, correct};
}

unsigned resolve_threads(unsigned requested, std::size_t work) {
  unsigned threads = requested != 0 ? requested : std::max(1U, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(work, 1)));
}

}  // namespace

ExperimentReport run_attack_experiment(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  const unsigned workers = resolve_threads(threads, config.trials);
  std::vector<Tally> tallies(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const std::size_t begin = config.trials * w / workers;
        const std::size_t end = config.trials * (w + 1) / workers;
        for (std::size_t i = begin; i < end; ++i) {
          const auto tally = run_trial(config, i);
          tallies[w].successes += tally.successes;
          tallies[w].positions += tally.positions;
        }
      });
    }
  }
  Tally total;
  for (const auto& t : tallies) {
    total.successes += t.successes;
    total.positions += t.positions;
  }

  ExperimentReport report;
  report.config = config;
  report.successes = total.successes;
  report.measured_rate = static_cast<double>(total.successes) / static_cast<double>(config.trials);
  report.confidence_interval = score_interval(total.successes, config.trials);
  report.formula_rate = adversary::attack_success_formula(config.n, config.leaks);
  report.per_position_rate =
      static_cast<double>(total.positions) / static_cast<double>(config.trials * config.n);
  if (2 * config.n * config.leaks <= kEnumerationBudgetBits) {
    report.exact_rate = exact_attack_probability(config.n, config.leaks, config.mode);
  }
  return report;
}

double exact_attack_probability(std::size_t n, std::size_t leaks, RecoveryMode mode, std::size_t budget_bits) {
  if (n == 0) throw Error(Errc::invalid_parameter, "n must be at least 1");
  const std::size_t width = 2 * n;
  const std::size_t bits = width * leaks;
  if (bits > budget_bits || bits >= 63) {
    throw Error(Errc::budget_exceeded, "enumerating 2^" + std::to_string(bits) + " sequence tuples exceeds budget 2^" +
                                           std::to_string(budget_bits));
  }

  const std::uint64_t tuples = std::uint64_t{1} << bits;
  const std::uint64_t mask = (std::uint64_t{1} << leaks) - 1;
  std::vector<std::uint64_t> column(width);
  double total = 0;
  for (std::uint64_t m = 0; m < tuples; ++m) {
    // column-major: bit (i * N + t) of m is sequence t at position i + 1,
    // so position i's column across all N sequences is one N-bit field
    for (std::size_t i = 0; i < width; ++i) column[i] = leaks == 0 ? 0 : (m >> (i * leaks)) & mask;
    double outcome = 1;
    for (std::size_t j = 0; j < n; ++j) {
      const auto equal = static_cast<std::size_t>(std::count(column.begin(), column.end(), column[j]));
      if (mode == RecoveryMode::strict_singleton) {
        if (equal != 1) {
          outcome = 0;
          break;
        }
      } else {
        outcome /= static_cast<double>(equal);
      }
    }
    total += outcome;
  }
  return total / static_cast<double>(tuples);
}

ColumnMatchReport run_accidental_match_experiment(std::size_t n, std::size_t leaks, std::size_t trials,
                                                  std::uint64_t seed) {
  if (n == 0 || trials == 0) throw Error(Errc::invalid_parameter, "n and trials must be at least 1");
  ColumnMatchReport report;
  report.leaks = leaks;
  report.trials = trials;
  for (std::size_t k = 0; k < trials; ++k) {
    Rng rng(derive_seed(seed, k));
    protocol::SystemOneSession session(random_balanced_bits(n, rng));
    const std::size_t wrong = session.p_key()[0];
    bool match = true;
    for (std::size_t t = 0; t < leaks; ++t) {
      const auto sequence = random_bits(2 * n, rng);
      const auto keys = session.step(sequence);
      match = match && sequence[wrong - 1] == keys.r.bits[0];
    }
    report.matches += match;
  }
  report.rate = static_cast<double>(report.matches) / static_cast<double>(trials);
  report.expected = adversary::accidental_match_probability(leaks);
  report.sigma = std::sqrt(report.expected * (1 - report.expected) / static_cast<double>(trials));
  return report;
}

std::vector<ExperimentReport> sweep(const std::vector<ExperimentConfig>& configs, unsigned threads) {
  if (configs.empty()) throw Error(Errc::invalid_parameter, "sweep needs at least one config");
  std::vector<ExperimentReport> reports;
  reports.reserve(configs.size());
  for (const auto& config : configs) reports.push_back(run_attack_experiment(config, threads));
  return reports;
}

void write_csv(std::ostream& out, const std::vector<ExperimentReport>& reports) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << "n,N,trials,measured_rate,ci_low,ci_high,formula_rate,per_position_rate,exact_rate\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : reports) {
    out << r.config.n << ',' << r.config.leaks << ',' << r.config.trials << ',' << r.measured_rate << ','
        << r.confidence_interval.low << ',' << r.confidence_interval.high << ',' << r.formula_rate << ','
        << r.per_position_rate << ',';
    if (r.exact_rate) out << *r.exact_rate;
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

std::string sweep_csv(const std::vector<ExperimentConfig>& configs, unsigned threads) {
  std::ostringstream out;
  write_csv(out, sweep(configs, threads));
  return out.str();
}

namespace {

std::size_t parse_count(const std::string& text) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    throw Error(Errc::parse_error, "expected a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::size_t>(value);
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<std::size_t> parse_count_list(const std::string& text) {
  std::vector<std::size_t> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const auto low = parse_count(trim(text.substr(0, dots)));
    const auto high = parse_count(trim(text.substr(dots + 2)));
    if (high < low) throw Error(Errc::parse_error, "empty range '" + text + "'");
    for (auto v = low; v <= high; ++v) out.push_back(v);
    return out;
  }
  std::stringstream fields(text);
  std::string field;
  while (std::getline(fields, field, ',')) out.push_back(parse_count(trim(field)));
  if (out.empty()) throw Error(Errc::parse_error, "empty list");
  return out;
}

std::vector<ExperimentConfig> parse_config(std::istream& in) {
  std::map<std::string, std::string> values;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::parse_error, "expected key=value, got '" + line + "'");
    const auto key = trim(line.substr(0, eq));
    if (key != "n" && key != "N" && key != "trials" && key != "seed" && key != "mode") {
      throw Error(Errc::parse_error, "unknown config key '" + key + "'");
    }
    values[key] = trim(line.substr(eq + 1));
  }

  ExperimentConfig base;
  if (auto it = values.find("trials"); it != values.end()) base.trials = parse_count(it->second);
  if (auto it = values.find("seed"); it != values.end()) base.seed = parse_count(it->second);
  if (auto it = values.find("mode"); it != values.end()) base.mode = recovery_mode_from_string(it->second);
  const auto ns = values.count("n") ? parse_count_list(values["n"]) : std::vector<std::size_t>{base.n};
  const auto leaks = values.count("N") ? parse_count_list(values["N"]) : std::vector<std::size_t>{base.leaks};

  std::vector<ExperimentConfig> configs;
  for (auto n : ns) {
    for (auto l : leaks) {
      auto config = base;
      config.n = n;
      config.leaks = l;
      config.validate();
      configs.push_back(config);
    }
  }
  return configs;
}

}  // namespace upad::harness
