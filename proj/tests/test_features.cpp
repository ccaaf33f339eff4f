#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bars/error.hpp"
#include "bars/features.hpp"
#include "oracles.hpp"

using namespace bars;

namespace {

RelativeSignal signal_of(std::vector<double> x, std::vector<double> y = {}, double fps = 30.0) {
  RelativeSignal s;
  if (y.empty()) y.assign(x.size(), 0.0);
  s.x = std::move(x);
  s.y = std::move(y);
  s.valid.assign(s.x.size(), true);
  s.fps = fps;
  return s;
}

CycleSet fnf(std::vector<Cycle> cycles) {
  CycleSet set;
  set.designation = Designation::FingerNoseFinger;
  set.cycles = std::move(cycles);
  return set;
}

// Adds discarded spans so the cycles tile [0, n).
CycleSet tiled(CycleSet set, std::size_t n) {
  set.discarded.clear();
  if (set.cycles.front().start > 0) set.discarded.push_back({0, set.cycles.front().start});
  if (set.cycles.back().end < n) set.discarded.push_back({set.cycles.back().end, n});
  return set;
}

// Sawtooth-like exam: each cycle rises for `up` samples and falls for `down`.
RelativeSignal sawtooth(int cycles, int up, int down, double fps = 30.0) {
  std::vector<double> x;
  for (int c = 0; c < cycles; ++c) {
    for (int t = 0; t < up; ++t) x.push_back(double(t) / up);
    for (int t = 0; t < down; ++t) x.push_back(1.0 - double(t) / down);
  }
  x.push_back(0.0);
  return signal_of(x, {}, fps);
}

}  // namespace

TEST(Durations, IdenticalCycles) {
  const auto d = duration_features(fnf({{0, 15, 30}, {30, 45, 60}, {60, 75, 90}}), 30.0);
  EXPECT_EQ(d.log_mean_cycle_s, 0.0);
  EXPECT_EQ(d.std_cycle_s, 0.0);
  EXPECT_EQ(d.std_n2f_s, 0.0);
  EXPECT_EQ(d.std_f2n_s, 0.0);
  EXPECT_DOUBLE_EQ(d.log_mean_n2f_s, std::log(0.5));
}

TEST(Durations, ThirtyAndSixtyFrames) {
  const auto d = duration_features(fnf({{0, 15, 30}, {30, 50, 90}}), 30.0);
  EXPECT_DOUBLE_EQ(d.log_mean_cycle_s, std::log(1.5));
  EXPECT_DOUBLE_EQ(d.std_cycle_s, 0.5);
}

TEST(Durations, SingleCycleHasZeroSpread) {
  const auto d = duration_features(fnf({{3, 20, 41}}), 30.0);
  EXPECT_EQ(d.std_cycle_s, 0.0);
  EXPECT_EQ(d.std_n2f_s, 0.0);
  EXPECT_EQ(d.std_f2n_s, 0.0);
}

TEST(Durations, HalvesFollowDesignation) {
  // Finger-nose-finger: Backward, Forward, Backward. The half that starts
  // with the Forward crossing (mid -> end) is nose-to-finger.
  auto set = fnf({{0, 10, 40}});
  auto d = duration_features(set, 10.0);
  EXPECT_DOUBLE_EQ(d.log_mean_f2n_s, std::log(1.0));
  EXPECT_DOUBLE_EQ(d.log_mean_n2f_s, std::log(3.0));
  set.designation = Designation::NoseFingerNose;
  d = duration_features(set, 10.0);
  EXPECT_DOUBLE_EQ(d.log_mean_n2f_s, std::log(1.0));
  EXPECT_DOUBLE_EQ(d.log_mean_f2n_s, std::log(3.0));
}

TEST(Durations, Errors) {
  EXPECT_THROW(duration_features(fnf({}), 30.0), Error);
  EXPECT_THROW(duration_features(fnf({{0, 0, 10}}), 30.0), Error);
}

TEST(DirectionChanges, MonotoneRamp) {
  std::vector<double> x(20);
  for (int t = 0; t < 20; ++t) x[t] = t;
  const auto d = direction_changes(signal_of(x), fnf({{0, 10, 19}}));
  EXPECT_EQ(d.x_raw, 0.0);
  EXPECT_EQ(d.x_per_cycle, 0.0);
}

TEST(DirectionChanges, TwoPeriodsOfSine) {
  std::vector<double> x(200);
  for (int t = 0; t < 200; ++t) x[t] = std::sin(2 * std::numbers::pi * t / 100.0);
  // Oracle: sign flips between consecutive non-zero differences.
  int expected = 0, last = 0;
  for (int t = 1; t < 200; ++t) {
    const double d = x[t] - x[t - 1];
    const int s = (d > 0) - (d < 0);
    if (s != 0 && last != 0 && s != last) ++expected;
    if (s != 0) last = s;
  }
  EXPECT_EQ(expected, 4);
  const auto d = direction_changes(signal_of(x), fnf({{0, 100, 199}}));
  EXPECT_EQ(d.x_raw, 4.0);
}

TEST(DirectionChanges, DuplicatedCycleDoublesRawOnly) {
  std::vector<double> one, y1;
  for (int t = 0; t <= 40; ++t) {
    one.push_back(std::sin(2 * std::numbers::pi * t / 40.0) + 0.1 * std::sin(2 * std::numbers::pi * t * 3 / 40.0));
    y1.push_back(std::cos(2 * std::numbers::pi * t * 5 / 40.0));
  }
  auto two = one, y2 = y1;
  two.insert(two.end(), one.begin() + 1, one.end());
  y2.insert(y2.end(), y1.begin() + 1, y1.end());
  const auto a = direction_changes(signal_of(one, y1), fnf({{0, 20, 40}}));
  const auto b = direction_changes(signal_of(two, y2), fnf({{0, 20, 40}, {40, 60, 80}}));
  EXPECT_EQ(b.x_per_cycle, a.x_per_cycle);
  EXPECT_EQ(b.y_per_cycle, a.y_per_cycle);
  EXPECT_EQ(b.x_raw, 2 * a.x_raw);
}

TEST(DirectionChanges, PlateausCarrySign) {
  const std::vector<double> x{0, 1, 1, 1, 2, 2, 1, 1, 0};
  EXPECT_EQ(count_sign_changes(x), 1u);
}

TEST(Apen, ConstantSeriesIsZero) {
  const std::vector<double> x(50, 3.0);
  for (double r : kApenTolerances) EXPECT_EQ(apen(x, 3, r), 0.0);
}

TEST(Apen, AlternatingSeriesMatchesOracle) {
  std::vector<double> x(50);
  for (int t = 0; t < 50; ++t) x[t] = t % 2;
  EXPECT_NEAR(apen(x, 2, 0.5), oracle::apen(x, 2, 0.5), 1e-12);
}

TEST(Apen, RandomSeriesMatchOracle) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(30 + 7 * trial);
    for (auto& v : x) v = g(rng);
    for (int m : {2, 3})
      for (double r : kApenTolerances) EXPECT_NEAR(apen(x, m, r), oracle::apen(x, m, r), 1e-10);
  }
}

TEST(Apen, AffineInvariantAndNonNegative) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(80);
  for (auto& v : x) v = u(rng);
  auto y = x;
  for (auto& v : y) v = 2.0 * v + 5.0;
  for (double r : kApenTolerances) {
    EXPECT_NEAR(apen(x, 3, r), apen(y, 3, r), 1e-12);
    EXPECT_GE(apen(x, 3, r), 0.0);
  }
}

TEST(Apen, Errors) {
  const std::vector<double> short_series{1, 2, 3, 4};
  EXPECT_THROW(apen(short_series, 3, 0.1), Error);
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  EXPECT_THROW(apen(x, 2, 0.0), Error);
  const std::vector<double> bad{1, 2, std::nan(""), 4, 5, 6};
  EXPECT_THROW(apen(bad, 2, 0.1), Error);
}

TEST(Featurize, UniformSawtooth) {
  const auto s = sawtooth(4, 12, 18);
  const CycleSet set = tiled(fnf({{0, 12, 30}, {30, 42, 60}, {60, 72, 90}, {90, 102, 120}}), s.size());
  const auto f = featurize(s, set, s.fps);
  EXPECT_EQ(f.std_cycle_s, 0.0);
  EXPECT_EQ(f.std_n2f_s, 0.0);
  EXPECT_EQ(f.std_f2n_s, 0.0);
  EXPECT_EQ(f.dirchg_x_per_cycle, f.dirchg_x_raw / 4);
  EXPECT_DOUBLE_EQ(f.log_mean_cycle_s, std::log(1.0));
  const auto seg = segmented_x(s, set);
  EXPECT_EQ(seg.size(), 121u);
  EXPECT_EQ(f.apen_r012, apen(seg, kApenEmbedding, 0.12));
  EXPECT_EQ(f.to_array().size(), kFeatureCount);
}

TEST(Featurize, YFlipKeepsFeatures) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> g(0, 0.05);
  auto s = sawtooth(5, 15, 20);
  for (auto& v : s.y) v = g(rng);
  auto flipped = s;
  for (auto& v : flipped.y) v = -v;
  const CycleSet set = tiled(fnf({{0, 15, 35}, {35, 50, 70}, {70, 85, 105}, {105, 120, 140}}), s.size());
  EXPECT_EQ(featurize(s, set, s.fps), featurize(flipped, set, flipped.fps));
}

TEST(Featurize, DoublingFpsKeepsDurationsAndCounts) {
  const auto slow = sawtooth(3, 10, 14, 25.0);
  const auto fast = sawtooth(3, 20, 28, 50.0);
  const auto a = featurize(slow, tiled(fnf({{0, 10, 24}, {24, 34, 48}, {48, 58, 72}}), slow.size()), 25.0);
  const auto b = featurize(fast, tiled(fnf({{0, 20, 48}, {48, 68, 96}, {96, 116, 144}}), fast.size()), 50.0);
  EXPECT_DOUBLE_EQ(a.log_mean_cycle_s, b.log_mean_cycle_s);
  EXPECT_DOUBLE_EQ(a.log_mean_n2f_s, b.log_mean_n2f_s);
  EXPECT_DOUBLE_EQ(a.log_mean_f2n_s, b.log_mean_f2n_s);
  EXPECT_EQ(a.dirchg_x_raw, b.dirchg_x_raw);
}

TEST(Featurize, CountsInvariantToScaling) {
  auto s = sawtooth(4, 9, 11);
  const CycleSet set = fnf({{0, 9, 20}, {20, 29, 40}, {40, 49, 60}, {60, 69, 80}});
  auto scaled = s;
  for (auto& v : scaled.x) v *= 37.0;
  const auto a = direction_changes(s, set), b = direction_changes(scaled, set);
  EXPECT_EQ(a.x_raw, b.x_raw);
}

TEST(Featurize, DeterministicAndArrayRoundTrip) {
  const auto s = sawtooth(3, 10, 10);
  const CycleSet set = tiled(fnf({{0, 10, 20}, {20, 30, 40}, {40, 50, 60}}), s.size());
  const auto a = featurize(s, set, 30.0), b = featurize(s, set, 30.0);
  EXPECT_EQ(a, b);
  EXPECT_EQ(FeatureVector::from_array(a.to_array()), a);
}
