#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "bars/segment.hpp"
#include "bars/signal.hpp"

namespace bars {

inline constexpr std::size_t kFeatureCount = 14;

/// Canonical feature names, in vector order. Every features CSV and model
/// file carries exactly these names.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "log_mean_cycle_s",   "log_mean_n2f_s",     "log_mean_f2n_s", "dirchg_x_raw", "dirchg_y_raw",
    "dirchg_x_per_cycle", "dirchg_y_per_cycle", "std_cycle_s",    "std_n2f_s",    "std_f2n_s",
    "apen_r010",          "apen_r012",          "apen_r014",      "apen_r018",
};

inline constexpr std::array<double, 4> kApenTolerances = {0.10, 0.12, 0.14, 0.18};
inline constexpr std::size_t kApenEmbedding = 3;

struct FeatureVector {
  double log_mean_cycle_s = 0.0;
  double log_mean_n2f_s = 0.0;
  double log_mean_f2n_s = 0.0;
  double dirchg_x_raw = 0.0;
  double dirchg_y_raw = 0.0;
  double dirchg_x_per_cycle = 0.0;
  double dirchg_y_per_cycle = 0.0;
  double std_cycle_s = 0.0;
  double std_n2f_s = 0.0;
  double std_f2n_s = 0.0;
  double apen_r010 = 0.0;
  double apen_r012 = 0.0;
  double apen_r014 = 0.0;
  double apen_r018 = 0.0;

  std::array<double, kFeatureCount> to_array() const;
  static FeatureVector from_array(const std::array<double, kFeatureCount>& values);

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Nose-to-finger is the half that begins with a Forward crossing (the
/// wrist heading for the examiner's finger); finger-to-nose begins with a
/// Backward crossing.
struct DurationFeatures {
  double log_mean_cycle_s = 0.0;
  double log_mean_n2f_s = 0.0;
  double log_mean_f2n_s = 0.0;
  double std_cycle_s = 0.0;
  double std_n2f_s = 0.0;
  double std_f2n_s = 0.0;
};

DurationFeatures duration_features(const CycleSet& cycles, double fps);

struct DirectionChangeFeatures {
  double x_raw = 0.0;
  double y_raw = 0.0;
  double x_per_cycle = 0.0;
  double y_per_cycle = 0.0;
};

/// Counts sign changes of the forward difference inside each cycle's
/// samples [start, end]; zero differences keep the previous sign.
DirectionChangeFeatures direction_changes(const RelativeSignal& signal, const CycleSet& cycles);

/// Sign changes of the first difference of `series`, plateaus skipped.
std::size_t count_sign_changes(std::span<const double> series);

/// Approximate entropy with embedding dimension m and tolerance r times the
/// population standard deviation. Zero-variance input gives 0.
double apen(std::span<const double> series, std::size_t m, double r);

/// x samples from the first cycle's start through the last cycle's end.
std::vector<double> segmented_x(const RelativeSignal& signal, const CycleSet& cycles);

FeatureVector featurize(const RelativeSignal& signal, const CycleSet& cycles, double fps);

}  // namespace bars
