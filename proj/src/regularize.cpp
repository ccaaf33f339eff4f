#include "bars/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bars/error.hpp"
#include "bars/kernels.hpp"

namespace bars {

MotionTrajectory::MotionTrajectory(int id, std::size_t start_frame, std::vector<Point2> points)
    : id_(id), start_frame_(start_frame), points_(std::move(points)) {
  for (std::size_t i = 1; i < points_.size(); ++i) total_motion_ += distance(points_[i - 1], points_[i]);
}

KeypointTrack flow_smooth(const KeypointTrack& estimates, std::span<const FlowSample> flows, int window) {
  if (window < 1 || window % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "smoothing window must be odd and >= 1");
  const std::size_t n = estimates.frames.size();
  if (static_cast<std::size_t>(window) > 2 * n - 1)
    throw Error(ErrorCode::WindowTooLarge, "window exceeds 2*frames-1");
  if (flows.size() + 1 != n)
    throw Error(ErrorCode::LengthMismatch, "need one flow sample per frame gap");
  for (const auto& f : flows)
    if (!std::isfinite(f.dx) || !std::isfinite(f.dy)) throw Error(ErrorCode::NonFinite, "flow sample not finite");
  return kernels::omp::flow_smooth(estimates, flows, (window - 1) / 2);
}

std::vector<MotionTrajectory> fastest_region(std::span<const MotionTrajectory> trajectories, double top_fraction) {
  if (trajectories.empty()) throw Error(ErrorCode::EmptyInput, "no trajectories");
  if (!(top_fraction > 0.0 && top_fraction <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "top_fraction must lie in (0, 1]");

  std::vector<std::size_t> order(trajectories.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ta = trajectories[a];
    const auto& tb = trajectories[b];
    if (ta.total_motion() != tb.total_motion()) return ta.total_motion() > tb.total_motion();
    return ta.start_frame() < tb.start_frame();
  });

  // The 1e-9 slack keeps products like 0.2 * 10 from rounding up past 2.
  const double want = std::ceil(top_fraction * static_cast<double>(trajectories.size()) - 1e-9);
  const auto keep = std::clamp<std::size_t>(static_cast<std::size_t>(want), 1, trajectories.size());

  std::vector<MotionTrajectory> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(trajectories[order[i]]);
  return out;
}

KeypointTrack constrain_to_region(const KeypointTrack& track, std::span<const MotionTrajectory> region,
                                  double max_snap) {
  KeypointTrack out = track;
  if (region.empty()) return out;
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    const Point2 p = out.frames[t].position();
    double best = std::numeric_limits<double>::infinity();
    Point2 nearest{};
    for (const auto& traj : region) {
      if (!traj.active_at(t)) continue;
      const Point2 q = traj.at(t);
      const double d = distance(p, q);
      if (d < best) {
        best = d;
        nearest = q;
      }
    }
    if (std::isfinite(best) && best > max_snap) {
      out.frames[t].x = nearest.x;
      out.frames[t].y = nearest.y;
    }
  }
  return out;
}

double default_snap_radius(const KeypointTrack& track, double fraction, double conf_floor) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& f : track.frames) {
    if (f.confidence < conf_floor || !std::isfinite(f.x)) continue;
    lo = std::min(lo, f.x);
    hi = std::max(hi, f.x);
  }
  return hi > lo ? fraction * (hi - lo) : std::numeric_limits<double>::infinity();
}

}  // namespace bars
