#include <algorithm>
#include <cmath>

#include "bars/kernels.hpp"
#include "kernels_detail.hpp"

namespace bars::kernels {

double apen_from_counts(const MatchCounts& counts) {
  auto phi = [](const std::vector<std::size_t>& c) {
    const double windows = static_cast<double>(c.size());
    double sum = 0.0;
    for (std::size_t v : c) sum += std::log(static_cast<double>(v) / windows);
    return sum / windows;
  };
  return phi(counts.counts_m) - phi(counts.counts_m1);
}

namespace serial {

MatchCounts apen_match_counts(std::span<const double> x, std::size_t m, double tol) {
  MatchCounts out;
  out.counts_m.resize(x.size() - m + 1);
  out.counts_m1.resize(x.size() - m);
  for (std::size_t i = 0; i < out.counts_m.size(); ++i) {
    std::size_t cm = 0, cm1 = 0;
    detail::match_row(x, m, tol, i, cm, cm1);
    out.counts_m[i] = cm;
    if (i < out.counts_m1.size()) out.counts_m1[i] = cm1;
  }
  return out;
}

KeypointTrack flow_smooth(const KeypointTrack& estimates, std::span<const FlowSample> flows, int half_window) {
  KeypointTrack out = estimates;
  if (half_window == 0) return out;
  for (std::size_t t = 0; t < out.frames.size(); ++t)
    detail::smooth_frame(estimates, flows, half_window, t, out.frames[t]);
  return out;
}

}  // namespace serial

}  // namespace bars::kernels
