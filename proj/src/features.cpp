#include "bars/features.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "bars/error.hpp"
#include "bars/kernels.hpp"

namespace bars {

namespace {

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (double a : v) ss += (a - mu) * (a - mu);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

std::array<double, kFeatureCount> FeatureVector::to_array() const {
  return {log_mean_cycle_s, log_mean_n2f_s,     log_mean_f2n_s,     dirchg_x_raw, dirchg_y_raw,
          dirchg_x_per_cycle, dirchg_y_per_cycle, std_cycle_s,      std_n2f_s,    std_f2n_s,
          apen_r010,        apen_r012,          apen_r014,          apen_r018};
}

FeatureVector FeatureVector::from_array(const std::array<double, kFeatureCount>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12], v[13]};
}

DurationFeatures duration_features(const CycleSet& cycles, double fps) {
  if (cycles.cycles.empty()) throw Error(ErrorCode::NoCycles, "duration features need at least one cycle");
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");

  // In a finger-nose-finger cycle (Backward, Forward, Backward) the first
  // half is finger-to-nose; nose-finger-nose cycles are the other way round.
  const bool first_half_is_n2f = cycles.designation == Designation::NoseFingerNose;

  std::vector<double> full, n2f, f2n;
  for (const auto& c : cycles.cycles) {
    if (!(c.start < c.mid && c.mid < c.end)) throw Error(ErrorCode::ZeroDuration, "cycle or half has zero frames");
    const double first = static_cast<double>(c.mid - c.start) / fps;
    const double second = static_cast<double>(c.end - c.mid) / fps;
    full.push_back(static_cast<double>(c.end - c.start) / fps);
    (first_half_is_n2f ? n2f : f2n).push_back(first);
    (first_half_is_n2f ? f2n : n2f).push_back(second);
  }

  DurationFeatures out;
  out.log_mean_cycle_s = std::log(mean(full));
  out.log_mean_n2f_s = std::log(mean(n2f));
  out.log_mean_f2n_s = std::log(mean(f2n));
  out.std_cycle_s = population_std(full);
  out.std_n2f_s = population_std(n2f);
  out.std_f2n_s = population_std(f2n);
  return out;
}

std::size_t count_sign_changes(std::span<const double> series) {
  std::size_t changes = 0;
  int sign = 0;
  for (std::size_t t = 1; t < series.size(); ++t) {
    const double d = series[t] - series[t - 1];
    const int s = (d > 0.0) - (d < 0.0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) ++changes;
    sign = s;
  }
  return changes;
}

DirectionChangeFeatures direction_changes(const RelativeSignal& signal, const CycleSet& cycles) {
  if (cycles.cycles.empty()) throw Error(ErrorCode::NoCycles, "direction changes need at least one cycle");
  std::size_t x_raw = 0, y_raw = 0;
  for (const auto& c : cycles.cycles) {
    if (c.end >= signal.size()) throw Error(ErrorCode::InvalidArgument, "cycle extends past the signal");
    const std::size_t len = c.end - c.start + 1;
    x_raw += count_sign_changes(std::span<const double>(signal.x).subspan(c.start, len));
    y_raw += count_sign_changes(std::span<const double>(signal.y).subspan(c.start, len));
  }
  const double n = static_cast<double>(cycles.size());
  DirectionChangeFeatures out;
  out.x_raw = static_cast<double>(x_raw);
  out.y_raw = static_cast<double>(y_raw);
  out.x_per_cycle = out.x_raw / n;
  out.y_per_cycle = out.y_raw / n;
  return out;
}

double apen(std::span<const double> series, std::size_t m, double r) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be >= 1");
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance fraction must be positive");
  if (series.size() <= m + 1) throw Error(ErrorCode::SeriesTooShort, "series must be longer than m + 1");
  for (double v : series)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "series contains a non-finite value");

  const double sigma = population_std(series);
  if (sigma == 0.0) return 0.0;
  const auto counts = kernels::omp::apen_match_counts(series, m, r * sigma);
  return std::max(0.0, kernels::apen_from_counts(counts));
}

std::vector<double> segmented_x(const RelativeSignal& signal, const CycleSet& cycles) {
  std::vector<double> out;
  for (const auto& c : cycles.cycles) out.insert(out.end(), signal.x.begin() + c.start, signal.x.begin() + c.end);
  if (!cycles.cycles.empty()) out.push_back(signal.x[cycles.cycles.back().end]);
  return out;
}

FeatureVector featurize(const RelativeSignal& signal, const CycleSet& cycles, double fps) {
  validate(cycles, signal.size());
  const auto dur = duration_features(cycles, fps);
  const auto dir = direction_changes(signal, cycles);
  const auto series = segmented_x(signal, cycles);

  FeatureVector f;
  f.log_mean_cycle_s = dur.log_mean_cycle_s;
  f.log_mean_n2f_s = dur.log_mean_n2f_s;
  f.log_mean_f2n_s = dur.log_mean_f2n_s;
  f.dirchg_x_raw = dir.x_raw;
  f.dirchg_y_raw = dir.y_raw;
  f.dirchg_x_per_cycle = dir.x_per_cycle;
  f.dirchg_y_per_cycle = dir.y_per_cycle;
  f.std_cycle_s = dur.std_cycle_s;
  f.std_n2f_s = dur.std_n2f_s;
  f.std_f2n_s = dur.std_f2n_s;
  f.apen_r010 = apen(series, kApenEmbedding, kApenTolerances[0]);
  f.apen_r012 = apen(series, kApenEmbedding, kApenTolerances[1]);
  f.apen_r014 = apen(series, kApenEmbedding, kApenTolerances[2]);
  f.apen_r018 = apen(series, kApenEmbedding, kApenTolerances[3]);
  return f;
}

}  // namespace bars
