#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bars/signal.hpp"

namespace bars {

/// Optical-flow displacement at the wrist estimate, from frame i to i+1.
struct FlowSample {
  double dx = 0.0;
  double dy = 0.0;
};

/// A dense trajectory: consecutive positions starting at `start_frame`.
class MotionTrajectory {
 public:
  MotionTrajectory() = default;
  MotionTrajectory(int id, std::size_t start_frame, std::vector<Point2> points);

  int id() const { return id_; }
  std::size_t start_frame() const { return start_frame_; }
  std::size_t end_frame() const { return start_frame_ + points_.size(); }  // exclusive
  const std::vector<Point2>& points() const { return points_; }
  double total_motion() const { return total_motion_; }

  bool active_at(std::size_t frame) const { return frame >= start_frame_ && frame < end_frame(); }
  Point2 at(std::size_t frame) const { return points_[frame - start_frame_]; }

 private:
  int id_ = 0;
  std::size_t start_frame_ = 0;
  std::vector<Point2> points_;
  double total_motion_ = 0.0;
};

inline constexpr int kDefaultSmoothingWindow = 5;
inline constexpr double kDefaultTopFraction = 0.05;
inline constexpr double kDefaultSnapFraction = 0.25;

/// Confidence-weighted mean of the estimates within +-(window-1)/2 frames,
/// each carried to the current frame along the flow. Output confidence is
/// the mean weight of the contributing frames.
KeypointTrack flow_smooth(const KeypointTrack& estimates, std::span<const FlowSample> flows,
                          int window = kDefaultSmoothingWindow);

/// The ceil(top_fraction * n) trajectories with the largest total motion.
/// Ties go to the earlier start frame, then to input order.
std::vector<MotionTrajectory> fastest_region(std::span<const MotionTrajectory> trajectories,
                                             double top_fraction = kDefaultTopFraction);

/// Frames whose estimate lies farther than `max_snap` from every region
/// point active at that frame are moved onto the nearest such point.
KeypointTrack constrain_to_region(const KeypointTrack& track, std::span<const MotionTrajectory> region,
                                  double max_snap);

/// Snap radius as a fraction of the track's x-range over frames with
/// confidence >= conf_floor; infinite when that range is empty.
double default_snap_radius(const KeypointTrack& track, double fraction = kDefaultSnapFraction,
                           double conf_floor = kDefaultConfidenceFloor);

}  // namespace bars
