// End-to-end slot throughput of the simulator loop.

#include <benchmark/benchmark.h>

#include "saginmp/harness.hpp"

namespace {

using namespace saginmp;

Config bench_config() {
  Config cfg;
  cfg.scenario.num_ues = 3;
  cfg.scenario.num_paths = 2;
  cfg.scenario.slots_per_period = 250;
  fill_default_paths(cfg.scenario);
  cfg.transport.app_packets_per_slot = 18;
  cfg.experiment.horizon = 250;
  return cfg;
}

void BM_Episode(benchmark::State& state) {
  const Config cfg = bench_config();
  std::uint64_t seed = 1;
  for (auto _ : state) {
    RunContext ctx;
    ctx.scheme = {"minrtt", "phacc"};
    ctx.monitor = RewardMonitor(cfg.rhrm);
    ctx.scheduler = make_scheduler("minrtt", cfg.scenario.num_ues, cfg.sched);
    benchmark::DoNotOptimize(run_episode(cfg, ctx, seed++, nullptr, nullptr, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * cfg.experiment.horizon);
}
BENCHMARK(BM_Episode)->Unit(benchmark::kMillisecond);

void BM_EpisodeNnpe(benchmark::State& state) {
  const Config cfg = bench_config();
  std::uint64_t seed = 1;
  for (auto _ : state) {
    RunContext ctx;
    ctx.scheme = {"nnpe", "phacc"};
    ctx.monitor = RewardMonitor(cfg.rhrm);
    ctx.scheduler = make_scheduler("nnpe", cfg.scenario.num_ues, cfg.sched);
    benchmark::DoNotOptimize(run_episode(cfg, ctx, seed++, nullptr, nullptr, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * cfg.experiment.horizon);
}
BENCHMARK(BM_EpisodeNnpe)->Unit(benchmark::kMillisecond);

}  // namespace
