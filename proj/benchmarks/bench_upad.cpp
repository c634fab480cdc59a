#include <benchmark/benchmark.h>

#include "upad/adversary.hpp"
#include "upad/bits.hpp"
#include "upad/harness.hpp"
#include "upad/protocol.hpp"
#include "upad/transport.hpp"

using namespace upad;

static void BM_Extract(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto keys = derive_position_keys(SharedKey(random_balanced_bits(n, rng)));
  const auto sequence = random_bits(2 * n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(extract(keys.r, sequence));
}
BENCHMARK(BM_Extract)->Arg(7)->Arg(64)->Arg(1024);

static void BM_CorrelationAttack(benchmark::State& state) {
  const auto leaks = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto key = random_balanced_bits(7, rng);
  const auto run = protocol::run_system_one(key, leaks, protocol::SystemOneUsage::authentication, rng);
  const auto view = adversary::view_from_transcript(run.transcript);
  for (auto _ : state) benchmark::DoNotOptimize(adversary::correlation_attack(view));
}
BENCHMARK(BM_CorrelationAttack)->Arg(1)->Arg(10)->Arg(20);

static void BM_AttackTrial(benchmark::State& state) {
  harness::ExperimentConfig config;
  config.n = 7;
  config.leaks = 10;
  config.trials = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(harness::run_attack_experiment(config, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(config.trials));
}
BENCHMARK(BM_AttackTrial)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_SystemTwoStep(benchmark::State& state) {
  Rng rng(3);
  const auto key = random_balanced_bits(7, rng);
  for (auto _ : state) benchmark::DoNotOptimize(protocol::run_system_two(key, 1, false, rng));
}
BENCHMARK(BM_SystemTwoStep);

static void BM_EncodeFrame(benchmark::State& state) {
  Rng rng(4);
  const transport::Frame frame{transport::FrameKind::seq, 1, random_bits(static_cast<std::size_t>(state.range(0)), rng)};
  for (auto _ : state) benchmark::DoNotOptimize(transport::encode_frame(frame));
}
BENCHMARK(BM_EncodeFrame)->Arg(14)->Arg(2048);

static void BM_DecodeFrame(benchmark::State& state) {
  Rng rng(5);
  const auto bytes =
      transport::encode_frame({transport::FrameKind::seq, 1, random_bits(static_cast<std::size_t>(state.range(0)), rng)});
  for (auto _ : state) benchmark::DoNotOptimize(transport::decode_frame(bytes));
}
BENCHMARK(BM_DecodeFrame)->Arg(14)->Arg(2048);
BENCHMARK_MAIN();
