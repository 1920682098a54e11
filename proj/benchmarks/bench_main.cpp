// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <numeric>

#include "fastmatch/bitmap.hpp"
#include "fastmatch/engine.hpp"
#include "fastmatch/eval.hpp"
#include "fastmatch/random.hpp"
#include "fastmatch/stats.hpp"

namespace fm = fastmatch;

namespace {

const fm::SynthOutput& bench_data() {
  static const fm::SynthOutput data = [] {
    fm::SynthSpec s;
    s.num_candidates = 100;
    s.num_groups = 10;
    s.rows = 1'000'000;
    s.selectivity = fm::SelectivityProfile::Zipf;
    s.zipf_exponent = 0.8;
    s.distance = fm::DistanceProfile::UniformRandom;
    s.distance_lo = 0.1;
    s.distance_hi = 1.6;
    s.rng_seed = 1;
    return fm::synth_generate(s);
  }();
  return data;
}

fm::QuerySpec bench_query(double epsilon) {
  fm::QuerySpec q;
  q.x_attribute = std::string(fm::SynthSpec::kGroupAttribute);
  q.z_attribute = std::string(fm::SynthSpec::kCandidateAttribute);
  q.k = 5;
  q.epsilon = epsilon;
  q.delta = 0.05;
  q.sigma = 0.001;
  return q;
}

void BM_MarkLookahead(benchmark::State& state) {
  const auto& data = bench_data();
  std::vector<fm::CandidateId> active(static_cast<std::size_t>(state.range(0)));
  std::iota(active.begin(), active.end(), fm::CandidateId{100} - static_cast<fm::CandidateId>(active.size()));
  const std::uint64_t batch = 1024;
  std::uint64_t start = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fm::mark_lookahead(data.z_index, active, start, batch));
    start = (start + batch) % data.z_index.num_blocks();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_MarkLookahead)->Arg(1)->Arg(10)->Arg(100);

void BM_UnderrepresentationPvalues(benchmark::State& state) {
  fm::Rng rng(3);
  std::vector<std::uint64_t> obs(static_cast<std::size_t>(state.range(0)));
  for (auto& n : obs) n = rng.uniform_below(2000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fm::stats::underrepresentation_pvalues(10'000'000, 0.001, 500'000, obs));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UnderrepresentationPvalues)->Arg(100)->Arg(10'000);

void BM_HistSim(benchmark::State& state) {
  const auto& data = bench_data();
  const fm::QuerySpec q = bench_query(static_cast<double>(state.range(0)) / 100.0);
  fm::RunConfig c;
  c.m = 100'000;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    c.rng_seed = seed++;
    benchmark::DoNotOptimize(fm::histsim_run(data.dataset, data.z_index, q, c));
  }
}
BENCHMARK(BM_HistSim)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Scan(benchmark::State& state) {
  const auto& data = bench_data();
  const fm::QuerySpec q = bench_query(0.05);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fm::run_baseline(data.dataset, data.z_index, q, fm::Baseline::Scan));
  }
}
BENCHMARK(BM_Scan)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
