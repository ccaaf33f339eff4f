#pragma once

// Data-parallel inner loops. Each kernel has a plain serial version, kept as
// the reference the OpenMP version is tested against, and an OpenMP version
// the library calls. Both produce bit-identical results: the parallel loops
// write disjoint output slots and every reduction runs in fixed index order.

#include <cstddef>
#include <span>
#include <vector>

#include "bars/regularize.hpp"
#include "bars/signal.hpp"

namespace bars::kernels {

/// Template-match counts for approximate entropy. For window length m,
/// counts_m[i] = #{j : max_l |x[i+l] - x[j+l]| <= tol, l < m} over the
/// N-m+1 windows (self match included); counts_m1 likewise for m+1 over
/// N-m windows.
struct MatchCounts {
  std::vector<std::size_t> counts_m;
  std::vector<std::size_t> counts_m1;
};

/// Phi^m - Phi^{m+1} from match counts.
double apen_from_counts(const MatchCounts& counts);

namespace serial {
MatchCounts apen_match_counts(std::span<const double> x, std::size_t m, double tol);
KeypointTrack flow_smooth(const KeypointTrack& estimates, std::span<const FlowSample> flows, int half_window);
}  // namespace serial

namespace omp {
MatchCounts apen_match_counts(std::span<const double> x, std::size_t m, double tol);
KeypointTrack flow_smooth(const KeypointTrack& estimates, std::span<const FlowSample> flows, int half_window);
}  // namespace omp

}  // namespace bars::kernels
