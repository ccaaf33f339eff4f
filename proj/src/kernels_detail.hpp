#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "bars/kernels.hpp"

namespace bars::kernels {

namespace detail {

// Shared by both kernel flavours: counts for a single template i.
inline void match_row(std::span<const double> x, std::size_t m, double tol, std::size_t i,
                      std::size_t& count_m, std::size_t& count_m1) {
  const std::size_t n = x.size();
  const std::size_t windows_m = n - m + 1;
  const std::size_t windows_m1 = n - m;
  count_m = 0;
  count_m1 = 0;
  for (std::size_t j = 0; j < windows_m; ++j) {
    bool close = true;
    for (std::size_t l = 0; l < m; ++l) {
      if (std::abs(x[i + l] - x[j + l]) > tol) {
        close = false;
        break;
      }
    }
    if (!close) continue;
    ++count_m;
    if (i < windows_m1 && j < windows_m1 && std::abs(x[i + m] - x[j + m]) <= tol) ++count_m1;
  }
}

inline void smooth_frame(const KeypointTrack& est, std::span<const FlowSample> flows, int half_window,
                         std::size_t t, KeypointSample& out) {
  const auto n = static_cast<std::ptrdiff_t>(est.frames.size());
  const auto ti = static_cast<std::ptrdiff_t>(t);
  const auto& self = est.frames[t];

  double wsum = self.confidence;
  double sx = self.confidence * self.x;
  double sy = self.confidence * self.y;
  int used = 1;

  // Earlier frames: carried forward by the flow between them and t.
  double ox = 0.0, oy = 0.0;
  for (std::ptrdiff_t s = ti - 1; s >= std::max<std::ptrdiff_t>(0, ti - half_window); --s) {
    ox += flows[static_cast<std::size_t>(s)].dx;
    oy += flows[static_cast<std::size_t>(s)].dy;
    const auto& src = est.frames[static_cast<std::size_t>(s)];
    wsum += src.confidence;
    sx += src.confidence * (src.x + ox);
    sy += src.confidence * (src.y + oy);
    ++used;
  }
  // Later frames: carried backward.
  ox = 0.0;
  oy = 0.0;
  for (std::ptrdiff_t s = ti + 1; s <= std::min<std::ptrdiff_t>(n - 1, ti + half_window); ++s) {
    ox -= flows[static_cast<std::size_t>(s - 1)].dx;
    oy -= flows[static_cast<std::size_t>(s - 1)].dy;
    const auto& src = est.frames[static_cast<std::size_t>(s)];
    wsum += src.confidence;
    sx += src.confidence * (src.x + ox);
    sy += src.confidence * (src.y + oy);
    ++used;
  }

  out.confidence = wsum / used;
  if (wsum > 0.0) {
    out.x = sx / wsum;
    out.y = sy / wsum;
  } else {
    out.x = self.x;
    out.y = self.y;
  }
}

}  // namespace detail

}  // namespace bars::kernels
