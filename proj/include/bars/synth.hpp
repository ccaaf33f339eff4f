#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "bars/regularize.hpp"
#include "bars/signal.hpp"
#include "bars/stabilize.hpp"

namespace bars {

/// Slow camera zoom, roll and pan, each a sine that starts at zero so frame
/// 0 is the reference frame. Applied about the image centre.
struct CameraDrift {
  double zoom_amplitude = 0.35;     // relative scale change
  double rotation_amplitude = 0.3;  // radians
  double pan_amplitude = 80.0;      // pixels
  double min_period_s = 4.0;
  double max_period_s = 9.0;
};

struct SynthParams {
  double severity = 0.0;  // half point in [0, 4]
  int n_cycles = 8;
  double fps = 30.0;
  double base_cycle_s = 1.5;
  std::uint64_t noise_seed = 0;
  std::optional<CameraDrift> camera_motion;

  // Measurement model. These are not severity dependent.
  double wrist_noise_px = 1.0;
  double head_noise_px = 0.5;
  double dropout_rate = 0.02;
  double flow_noise_px = 0.3;
  double background_noise_px = 0.05;
  int background_points = 12;
  bool dense_trajectories = true;
};

void validate(const SynthParams& params);

struct SyntheticExam {
  VideoRecord record;
  std::vector<FlowSample> flow;
  std::vector<MotionTrajectory> trajectories;
  std::vector<SimilarityTransform> camera;  // per frame, world -> image
  KeypointTrack true_wrist;                 // noise-free, world coordinates
};

/// Out-and-back wrist motion along x. Mean cycle duration is
/// base_cycle_s * (1 + 0.5 * severity), per-cycle jitter has standard
/// deviation 0.1 * severity * mean, and 2 * severity ripples ride on each
/// cycle. The exam opens and closes with a half cycle so that segmentation
/// finds exactly n_cycles complete cycles. Fully determined by noise_seed.
/// These severity-to-kinematics coefficients are made up; they only exist
/// to make severity recoverable from the motion features.
SyntheticExam generate_exam(const SynthParams& params);

struct DatasetParams {
  int n_patients = 40;
  int videos_per_patient = 2;
  /// Relative weight of each half-point level 0, 0.5, ..., 4.
  std::array<double, 9> severity_distribution{1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::uint64_t seed = 0;
  int min_cycles = 6;
  int max_cycles = 10;
  SynthParams exam;  // template; severity, n_cycles and noise_seed are overwritten
};

struct SyntheticDataset {
  std::vector<SyntheticExam> exams;
  std::vector<double> patient_severity;  // latent, one per patient
};

/// Patient-level counts per severity level by largest remainder.
std::array<int, 9> severity_counts(const std::array<double, 9>& weights, int n_patients);

/// Each patient gets a latent severity; videos alternate right and left
/// hands, and the left hand's rating may differ from the right by 0.5.
SyntheticDataset generate_dataset(const DatasetParams& params);

}  // namespace bars
