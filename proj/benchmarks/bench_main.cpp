#include <benchmark/benchmark.h>

#include <vector>

#include "ergmeter/counters.hpp"
#include "ergmeter/optics.hpp"
#include "ergmeter/roofline.hpp"
#include "ergmeter/scaling.hpp"

using namespace ergmeter;

static void BM_PackCount(benchmark::State& state) {
  int grid = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(optics::pack_count(1920, 1080, 540 + (grid & 7), 450));
    ++grid;
  }
}
BENCHMARK(BM_PackCount);

static void BM_Archline(benchmark::State& state) {
  const roofline::MachineEnergyParams p{3.6e11, 1e11, 1e-10, 1.4e-9, 20.0};
  double i = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(roofline::efficiency_archline(p, i));
    i = i > 1e4 ? 0.01 : i * 1.01;
  }
}
BENCHMARK(BM_Archline);

static void BM_FitTimeModel(benchmark::State& state) {
  std::vector<scaling::RunRecord> runs;
  for (int c = 1; c <= 2048; c *= 2) {
    const double t = 1e7 * (0.01 + 0.99 / c);
    runs.push_back(scaling::make_run("r", (c + 35) / 36, c, 1, t, 1.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(scaling::fit_time_model(runs));
}
BENCHMARK(BM_FitTimeModel);

static void BM_PredictEnergyCurve(benchmark::State& state) {
  const scaling::TimeModel tm{1e7, 0.002};
  const scaling::PowerModel pm{100.0, 5.0};
  const auto max_cores = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(scaling::predict_energy_curve(tm, pm, scaling::Machine{36}, max_cores));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PredictEnergyCurve)->Arg(2048)->Arg(65536);

static void BM_SyntheticRead(benchmark::State& state) {
  counters::SyntheticScript s;
  for (int i = 0; i < state.range(0); ++i) s.segments.push_back({0.5, 100.0 + i});
  counters::SyntheticBackend backend(s);
  for (auto _ : state) {
    backend.advance(0.01);
    benchmark::DoNotOptimize(backend.read_sample());
  }
}
BENCHMARK(BM_SyntheticRead)->Arg(1)->Arg(64);
BENCHMARK_MAIN();
