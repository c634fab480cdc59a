#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "worked_example.hpp"
#include "upad/bits.hpp"
#include "upad/error.hpp"
#include "upad/random.hpp"

using namespace upad;

namespace {

BitString bits(std::string_view text) { return BitString::parse(text); }

template <typename F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an upad::Error";
  return Errc::io;
}

}  // namespace

TEST(BitString, ParsesAndPrints) {
  EXPECT_EQ(bits("0101\n").to_string(), "0101");
  EXPECT_EQ(bits("").size(), 0U);
  EXPECT_EQ(bits("1101").count_ones(), 3U);
  EXPECT_EQ(error_code([] { (void)bits("01a1"); }), Errc::parse_error);
  EXPECT_EQ(error_code([] { BitString({0, 2}); }), Errc::invalid_parameter);
}

TEST(BitString, WipeEmpties) {
  auto b = bits("1111");
  b.wipe();
  EXPECT_TRUE(b.empty());
}

TEST(PositionKey, RejectsBadShapes) {
  EXPECT_EQ(error_code([] { PositionKey({3, 2}, 4); }), Errc::invalid_parameter);
  EXPECT_EQ(error_code([] { PositionKey({2, 2}, 4); }), Errc::invalid_parameter);
  EXPECT_EQ(error_code([] { PositionKey({0, 2}, 4); }), Errc::invalid_parameter);
  EXPECT_EQ(error_code([] { PositionKey({1, 5}, 4); }), Errc::domain_mismatch);
  EXPECT_EQ(error_code([] { (void)PositionKey::parse("1,,2", 4); }), Errc::parse_error);
  EXPECT_EQ(error_code([] { (void)PositionKey::parse("1,2,", 4); }), Errc::parse_error);
  EXPECT_EQ(PositionKey::parse("2,3,4\n", 14).to_string(), "2,3,4");
}

TEST(SharedKey, RequiresBalance) {
  EXPECT_EQ(error_code([] { SharedKey(bits("")); }), Errc::invalid_key);
  EXPECT_EQ(error_code([] { SharedKey(bits("110")); }), Errc::invalid_key);
  EXPECT_EQ(error_code([] { SharedKey(bits("1110")); }), Errc::invalid_key);
  EXPECT_EQ(SharedKey(bits("0110")).half_length(), 2U);
}

TEST(DerivePositionKeys, WorkedExample) {
  const auto keys = derive_position_keys(SharedKey(bits(test::kKey)));
  EXPECT_EQ(keys.r.to_string(), test::kPositionsR);
  EXPECT_EQ(keys.p.to_string(), test::kPositionsP);
}

TEST(DerivePositionKeys, SmallKeys) {
  auto keys = derive_position_keys(SharedKey(bits("10")));
  EXPECT_EQ(keys.r.positions(), std::vector<std::size_t>{1});
  EXPECT_EQ(keys.p.positions(), std::vector<std::size_t>{2});
  keys = derive_position_keys(SharedKey(bits("0011")));
  EXPECT_EQ(keys.r.positions(), (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(keys.p.positions(), (std::vector<std::size_t>{1, 2}));
}

TEST(DerivePositionKeys, PartitionAndExtractionConsistency) {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = 1 + static_cast<std::size_t>(rng.below(40));
    const auto key = random_balanced_bits(n, rng);
    const auto keys = derive_position_keys(key);
    ASSERT_EQ(keys.r.size(), n);
    ASSERT_EQ(keys.p.size(), n);
    std::set<std::size_t> all(keys.r.positions().begin(), keys.r.positions().end());
    all.insert(keys.p.positions().begin(), keys.p.positions().end());
    ASSERT_EQ(all.size(), 2 * n);
    ASSERT_EQ(*all.begin(), 1U);
    ASSERT_EQ(*all.rbegin(), 2 * n);
    ASSERT_EQ(extract(keys.r, key.raw()).count_ones(), n);
    ASSERT_EQ(extract(keys.p, key.raw()).count_ones(), 0U);
  }
}

TEST(Extract, ExampleRows) {
  const auto keys = derive_position_keys(SharedKey(bits(test::kKey)));
  for (const auto& row : test::kRows) {
    EXPECT_EQ(extract(keys.r, bits(row.sequence)).to_string(), row.key_r) << row.label;
    EXPECT_EQ(extract(keys.p, bits(row.sequence)).to_string(), row.key_p) << row.label;
  }
  EXPECT_EQ(extract(PositionKey({1}, 2), bits("10")).to_string(), "1");
}

TEST(Extract, DomainMismatch) {
  EXPECT_EQ(error_code([] { (void)extract(PositionKey({1, 4}, 4), bits("101")); }), Errc::domain_mismatch);
}

TEST(Concat, Cases) {
  EXPECT_EQ(concat(bits("1011100"), bits("0100101")).to_string(), "10111000100101");
  EXPECT_EQ(concat(bits(""), bits("01")).to_string(), "01");
  EXPECT_EQ(concat(bits("1"), bits("0")).to_string(), "10");
}

TEST(Xor, MatchesPerBitTable) {
  // independent oracle: character-level truth table
  auto table_xor = [](std::string_view a, std::string_view b) {
    std::string out;
    for (std::size_t i = 0; i < a.size(); ++i) out += (a[i] == b[i]) ? '0' : '1';
    return out;
  };
  EXPECT_EQ(table_xor("1011100", "1100110"), "0111010");
  EXPECT_EQ(xor_bits(bits("1011100"), bits("1100110")).to_string(), "0111010");

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_bits(1 + rng.below(70), rng);
    const auto b = random_bits(a.size(), rng);
    ASSERT_EQ(xor_bits(a, b).to_string(), table_xor(a.to_string(), b.to_string()));
  }
}

TEST(Xor, IdentitiesAndInvolution) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const auto m = random_bits(rng.below(100), rng);
    const auto k = random_bits(m.size(), rng);
    const BitString zero(std::vector<std::uint8_t>(m.size(), 0));
    ASSERT_EQ(xor_bits(m, zero), m);
    ASSERT_EQ(xor_bits(k, k), zero);
    ASSERT_EQ(xor_bits(xor_bits(m, k), k), m);
  }
  EXPECT_EQ(error_code([] { (void)xor_bits(bits("10"), bits("1")); }), Errc::length_mismatch);
}

TEST(RandomBits, DeterministicUnderSeed) {
  Rng a(77);
  Rng b(77);
  EXPECT_EQ(random_bits(14, a), random_bits(14, b));
  Rng c(77);
  EXPECT_EQ(random_bits(0, c).size(), 0U);
  // bits are the top bits of the first engine output, MSB first
  std::mt19937_64 engine(77);
  const auto word = engine();
  std::string expected;
  for (int i = 63; i > 63 - 14; --i) expected += ((word >> i) & 1U) ? '1' : '0';
  Rng d(77);
  EXPECT_EQ(random_bits(14, d).to_string(), expected);
  EXPECT_EQ(expected, "00111100010110");
  // the engine itself is pinned by the standard: 10000th output of the default seed
  std::mt19937_64 reference;
  reference.discard(9999);
  EXPECT_EQ(reference(), 9981545732273789042ULL);
}

TEST(RandomBits, OnesWithinThreeSigma) {
  Rng rng(1);
  const auto ones = static_cast<double>(random_bits(1'000'000, rng).count_ones());
  EXPECT_LE(std::abs(ones - 500'000.0), 3 * 500.0);
}

TEST(RandomBalancedBits, Shapes) {
  Rng rng(9);
  EXPECT_EQ(error_code([&] { (void)random_balanced_bits(0, rng); }), Errc::invalid_parameter);
  const auto key = random_balanced_bits(7, rng);
  EXPECT_EQ(key.raw().size(), 14U);
  EXPECT_EQ(key.raw().count_ones(), 7U);
}

TEST(RandomBalancedBits, SmallestCaseIsFair) {
  Rng rng(10);
  std::size_t first_one = 0;
  const std::size_t draws = 100'000;
  for (std::size_t i = 0; i < draws; ++i) first_one += random_balanced_bits(1, rng).raw()[0];
  const double sigma = std::sqrt(0.25 / draws);
  EXPECT_NEAR(static_cast<double>(first_one) / draws, 0.5, 3 * sigma);
}

TEST(RandomBalancedBits, UniformOverArrangements) {
  // enumerate the C(6,3) = 20 arrangements independently
  std::map<std::string, std::size_t> counts;
  for (unsigned m = 0; m < 64; ++m) {
    if (__builtin_popcount(m) != 3) continue;
    std::string s;
    for (int i = 5; i >= 0; --i) s += ((m >> i) & 1U) ? '1' : '0';
    counts[s] = 0;
  }
  ASSERT_EQ(counts.size(), 20U);

  Rng rng(11);
  const std::size_t draws = 100'000;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto it = counts.find(random_balanced_bits(3, rng).raw().to_string());
    ASSERT_NE(it, counts.end());
    ++it->second;
  }
  const double p = 1.0 / 20;
  const double sigma = std::sqrt(p * (1 - p) / draws);
  double chi_square = 0;
  for (const auto& [arrangement, count] : counts) {
    const double freq = static_cast<double>(count) / draws;
    EXPECT_NEAR(freq, p, 3 * sigma) << arrangement;
    const double expected = p * draws;
    chi_square += (count - expected) * (count - expected) / expected;
  }
  // chi-square, 19 degrees of freedom, 0.999 quantile
  EXPECT_LT(chi_square, 43.82);
}

TEST(DeriveSeed, DistinctAcrossIndices) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 10000U);
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
}
