// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "bars/eval.hpp"
#include "bars/kernels.hpp"

using namespace bars;

namespace {

std::vector<double> random_walk(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(n);
  double v = 0;
  for (auto& s : x) s = v += g(rng);
  return x;
}

void ApenSerial(benchmark::State& state) {
  const auto x = random_walk(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::apen_match_counts(x, 3, 0.5));
}

void ApenOpenMP(benchmark::State& state) {
  const auto x = random_walk(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::apen_match_counts(x, 3, 0.5));
}

KeypointTrack track(std::size_t n) {
  const auto x = random_walk(n);
  KeypointTrack t;
  for (std::size_t i = 0; i < n; ++i) t.frames.push_back({x[i], -x[i], 0.8});
  return t;
}

void FlowSmoothSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = track(n);
  const std::vector<FlowSample> flow(n - 1, FlowSample{0.5, -0.25});
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::flow_smooth(t, flow, 5));
}

void FlowSmoothOpenMP(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = track(n);
  const std::vector<FlowSample> flow(n - 1, FlowSample{0.5, -0.25});
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::flow_smooth(t, flow, 5));
}

std::vector<FeatureRow> feature_rows(int patients) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  std::vector<FeatureRow> rows;
  for (int p = 0; p < patients; ++p)
    for (int v = 0; v < 2; ++v) {
      FeatureRow r;
      r.patient_id = "p" + std::to_string(p);
      r.video_id = r.patient_id + "_" + std::to_string(v);
      r.gold_rating = (p % 9) / 2.0;
      for (auto& f : r.features) f = g(rng);
      r.features[0] += r.gold_rating;
      rows.push_back(r);
    }
  return rows;
}

void LopoSerial(benchmark::State& state) {
  const auto rows = feature_rows(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_lopo_serial(rows, {}));
}

void LopoOpenMP(benchmark::State& state) {
  const auto rows = feature_rows(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_lopo(rows, {}));
}

}  // namespace

BENCHMARK(ApenSerial)->Arg(300)->Arg(1200)->Unit(benchmark::kMicrosecond);
BENCHMARK(ApenOpenMP)->Arg(300)->Arg(1200)->Unit(benchmark::kMicrosecond);
BENCHMARK(FlowSmoothSerial)->Arg(900)->Arg(9000)->Unit(benchmark::kMicrosecond);
BENCHMARK(FlowSmoothOpenMP)->Arg(900)->Arg(9000)->Unit(benchmark::kMicrosecond);
BENCHMARK(LopoSerial)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(LopoOpenMP)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
