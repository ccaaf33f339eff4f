#include <gtest/gtest.h>

#include <omp.h>

#include <random>

#include "bars/kernels.hpp"
#include "oracles.hpp"

using namespace bars;

namespace {

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(n);
  double v = 0;
  for (auto& s : x) s = v += g(rng);
  return x;
}

}  // namespace

TEST(Kernels, ApenCountsSerialEqualsOpenMP) {
  std::mt19937_64 rng(1);
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    for (std::size_t n : {5u, 17u, 120u, 301u}) {
      const auto x = random_series(rng, n);
      for (std::size_t m : {1u, 2u, 3u}) {
        const auto a = kernels::serial::apen_match_counts(x, m, 0.4);
        const auto b = kernels::omp::apen_match_counts(x, m, 0.4);
        EXPECT_EQ(a.counts_m, b.counts_m);
        EXPECT_EQ(a.counts_m1, b.counts_m1);
        EXPECT_EQ(kernels::apen_from_counts(a), kernels::apen_from_counts(b));
      }
    }
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST(Kernels, ApenCountsMatchDirectDefinition) {
  std::mt19937_64 rng(2);
  const auto x = random_series(rng, 60);
  double mean = 0, var = 0;
  for (double v : x) mean += v / 60;
  for (double v : x) var += (v - mean) * (v - mean) / 60;
  const double r = 0.2;
  const auto counts = kernels::serial::apen_match_counts(x, 2, r * std::sqrt(var));
  EXPECT_NEAR(kernels::apen_from_counts(counts), oracle::apen(x, 2, r), 1e-12);
}

TEST(Kernels, FlowSmoothSerialEqualsOpenMP) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100, 100), c(0, 1);
  std::normal_distribution<double> g(0, 2);
  for (int threads : {1, 3}) {
    omp_set_num_threads(threads);
    for (int h : {0, 1, 2, 5}) {
      KeypointTrack t;
      std::vector<FlowSample> flow;
      for (int i = 0; i < 200; ++i) t.frames.push_back({u(rng), u(rng), c(rng)});
      for (int i = 0; i < 199; ++i) flow.push_back({g(rng), g(rng)});
      const auto a = kernels::serial::flow_smooth(t, flow, h);
      const auto b = kernels::omp::flow_smooth(t, flow, h);
      for (int i = 0; i < 200; ++i) {
        EXPECT_EQ(a.frames[i].x, b.frames[i].x);
        EXPECT_EQ(a.frames[i].y, b.frames[i].y);
        EXPECT_EQ(a.frames[i].confidence, b.frames[i].confidence);
      }
    }
  }
  omp_set_num_threads(omp_get_num_procs());
}
