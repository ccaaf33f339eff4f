#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bars/features.hpp"
#include "bars/regularize.hpp"
#include "bars/segment.hpp"
#include "bars/signal.hpp"
#include "bars/stabilize.hpp"

namespace bars {

struct PipelineConfig {
  double conf_floor = kDefaultConfidenceFloor;
  std::size_t min_stabilization_points = kDefaultMinStabilizationPoints;
  bool stabilize = true;
  int smoothing_window = kDefaultSmoothingWindow;
  double top_fraction = kDefaultTopFraction;
  double snap_fraction = kDefaultSnapFraction;
  double forward_fraction = kDefaultForwardFraction;
  double backward_fraction = kDefaultBackwardFraction;
};

/// Everything recorded for one exam video. Flow and dense trajectories
/// are optional; without them the matching regularization step is skipped.
struct VideoInputs {
  VideoRecord record;
  std::vector<FlowSample> flow;
  std::vector<MotionTrajectory> trajectories;
};

struct ProcessedVideo {
  FeatureVector features;
  CycleSet cycles;
  RelativeSignal signal;  // normalized
  bool stabilized = false;
  std::vector<SimilarityTransform> transforms;
  std::vector<double> transform_rms;
};

/// A stage failure: `stage` names where it happened, `reason` is the error
/// code name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string reason, const std::string& detail)
      : std::runtime_error(stage + ": " + detail), stage_(std::move(stage)), reason_(std::move(reason)) {}

  const std::string& stage() const { return stage_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string stage_;
  std::string reason_;
};

/// stabilize -> flow smoothing -> region constraint -> relative signal ->
/// normalization and segmentation -> features. Throws StageError.
ProcessedVideo process_video(const VideoInputs& inputs, const PipelineConfig& config);

/// Carries flow samples measured at `wrist` in camera coordinates into the
/// frame-0 coordinates given by `to_reference` (one map per frame).
std::vector<FlowSample> stabilize_flow(const KeypointTrack& wrist, std::span<const FlowSample> flow,
                                       std::span<const SimilarityTransform> to_reference);

std::vector<MotionTrajectory> stabilize_trajectories(std::span<const MotionTrajectory> trajectories,
                                                     std::span<const SimilarityTransform> to_reference);

}  // namespace bars
