#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "bars/signal.hpp"

namespace bars {

/// p -> scale * R(rotation) * p + translation.
struct SimilarityTransform {
  double scale = 1.0;
  double rotation = 0.0;
  Point2 translation{};

  static SimilarityTransform identity() { return {}; }

  Point2 apply(Point2 p) const;
  SimilarityTransform inverse() const;
};

/// (outer ∘ inner)(p) == outer.apply(inner.apply(p)).
SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner);

struct PointCorrespondences {
  std::vector<std::pair<Point2, Point2>> pairs;  // (source, destination)
};

struct SimilarityEstimate {
  SimilarityTransform transform;
  double rms = 0.0;          // residual RMS over the pairs used in the final fit
  std::size_t inliers = 0;   // pairs used in the final fit
};

/// Closed-form least-squares similarity (centroid alignment, optimal 2-D
/// rotation from the cross-covariance, scale from the covariance ratio).
/// One trimming pass drops pairs whose residual exceeds three times the
/// median and refits, provided at least two non-coincident pairs remain.
SimilarityEstimate estimate_similarity(const PointCorrespondences& corr);

/// The closed-form fit without trimming.
SimilarityTransform fit_similarity(std::span<const std::pair<Point2, Point2>> pairs);

double residual_rms(const SimilarityTransform& t, std::span<const std::pair<Point2, Point2>> pairs);

/// Frame-t-to-frame-0 maps: element t is the inverse of the cumulative
/// camera motion from frame 0 to frame t. `per_gap[i]` maps frame i to i+1.
std::vector<SimilarityTransform> to_reference_frame(std::span<const SimilarityTransform> per_gap);

/// Maps every frame's point into frame 0 coordinates. Confidences untouched.
KeypointTrack stabilize_track(const KeypointTrack& track, std::span<const SimilarityTransform> per_gap);

/// Re-applies the camera motion; inverse of stabilize_track.
KeypointTrack destabilize_track(const KeypointTrack& track, std::span<const SimilarityTransform> per_gap);

inline constexpr std::size_t kDefaultMinStabilizationPoints = 2;

/// Builds per-gap correspondences from background tracks. A track
/// contributes to gap t when it is confident (>= conf_floor) in both t and t+1.
std::vector<PointCorrespondences> background_correspondences(std::span<const KeypointTrack> background,
                                                             double conf_floor = kDefaultConfidenceFloor);

struct StabilizationResult {
  std::vector<KeypointTrack> tracks;
  bool stabilized = false;
  std::vector<SimilarityTransform> per_gap;  // empty unless stabilized
  std::vector<double> rms;                   // per gap, empty unless stabilized
};

/// Stabilizes all tracks when every gap has at least `min_points` usable
/// correspondences and every fit succeeds; otherwise hands the tracks back
/// untouched with stabilized == false. Never throws on bad background data.
StabilizationResult try_stabilize(std::span<const KeypointTrack> tracks,
                                  std::span<const PointCorrespondences> bg_corr,
                                  std::size_t min_points = kDefaultMinStabilizationPoints);

}  // namespace bars
