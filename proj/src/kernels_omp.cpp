#include <omp.h>

#include "bars/kernels.hpp"
#include "kernels_detail.hpp"

namespace bars::kernels::omp {

MatchCounts apen_match_counts(std::span<const double> x, std::size_t m, double tol) {
  MatchCounts out;
  out.counts_m.resize(x.size() - m + 1);
  out.counts_m1.resize(x.size() - m);
  const auto rows = static_cast<std::ptrdiff_t>(out.counts_m.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto row = static_cast<std::size_t>(i);
    std::size_t cm = 0, cm1 = 0;
    detail::match_row(x, m, tol, row, cm, cm1);
    out.counts_m[row] = cm;
    if (row < out.counts_m1.size()) out.counts_m1[row] = cm1;
  }
  return out;
}

KeypointTrack flow_smooth(const KeypointTrack& estimates, std::span<const FlowSample> flows, int half_window) {
  KeypointTrack out = estimates;
  if (half_window == 0) return out;
  const auto frames = static_cast<std::ptrdiff_t>(out.frames.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < frames; ++t) {
    const auto ft = static_cast<std::size_t>(t);
    detail::smooth_frame(estimates, flows, half_window, ft, out.frames[ft]);
  }
  return out;
}

}  // namespace bars::kernels::omp
