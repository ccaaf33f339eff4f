#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bars/eval.hpp"
#include "bars/model.hpp"
#include "bars/pipeline.hpp"
#include "bars/synth.hpp"

namespace bars::io {

namespace fs = std::filesystem;

/// 17 significant digits; the same double always prints the same bytes.
std::string format_double(double v);

// Trajectory CSV: frame,joint,x,y,confidence with joint in {wrist, head, bg<k>}.
struct TrajectoryFile {
  KeypointTrack wrist;
  KeypointTrack head;
  std::vector<KeypointTrack> background;
};

TrajectoryFile read_trajectory_csv(const fs::path& path, double fps);
void write_trajectory_csv(const fs::path& path, const VideoRecord& record);

// Flow CSV: frame,dx,dy (frame i holds the displacement from i to i+1).
std::vector<FlowSample> read_flow_csv(const fs::path& path);
void write_flow_csv(const fs::path& path, const std::vector<FlowSample>& flow);

// Dense trajectories CSV: traj_id,frame,x,y with consecutive frames per id.
std::vector<MotionTrajectory> read_dense_trajectories_csv(const fs::path& path);
void write_dense_trajectories_csv(const fs::path& path, const std::vector<MotionTrajectory>& trajectories);

// Dataset manifest CSV:
// video_id,patient_id,hand,gold_rating,fps,trajectory_path,flow_path,trajectories_path
// The last two columns may be empty. Relative paths resolve against the
// manifest's directory.
struct ManifestEntry {
  std::string video_id;
  std::string patient_id;
  Hand hand = Hand::Right;
  double gold_rating = 0.0;
  double fps = 30.0;
  fs::path trajectory_path;
  std::optional<fs::path> flow_path;
  std::optional<fs::path> trajectories_path;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries);

/// Returns true when the CSV header at `path` is a manifest header.
bool looks_like_manifest(const fs::path& path);

VideoInputs load_video(const ManifestEntry& entry);

// Features CSV: video_id,patient_id,hand,gold_rating,<14 canonical names>.
std::vector<FeatureRow> read_features_csv(const fs::path& path);
void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows);
void write_features_csv(const fs::path& path, const std::vector<FeatureRow>& rows);

nlohmann::json model_to_json(const RatingModel& model);
/// Throws Schema unless feature_names equal the canonical 14 names.
RatingModel model_from_json(const nlohmann::json& j);
void save_model(const fs::path& path, const RatingModel& model);
RatingModel load_model(const fs::path& path);

struct Prediction {
  std::string video_id;
  double raw = 0.0;
  double rounded = 0.0;
};
void write_predictions_csv(const fs::path& path, const std::vector<Prediction>& predictions);

// Rater CSV: video_id,rater_id,rating. rater_id "gold" marks the gold rating.
RaterMatrix read_raters_csv(const fs::path& path);

nlohmann::json segmentation_to_json(const CycleSet& cycles);
nlohmann::json transforms_to_json(const std::vector<SimilarityTransform>& per_gap, const std::vector<double>& rms);
nlohmann::json report_to_json(const EvaluationReport& report);
nlohmann::json random_rounding_to_json(const RandomRoundingResult& result);

/// Two-space indented, keys sorted, floats at 17 significant digits,
/// non-finite floats as null, trailing newline.
std::string dump_json(const nlohmann::json& j);
void write_json(const fs::path& path, const nlohmann::json& j);

/// Writes manifest.csv plus one trajectory, flow and dense-trajectory file
/// per video under `dir`; returns the manifest path.
fs::path write_synthetic_dataset(const fs::path& dir, const SyntheticDataset& dataset);

}  // namespace bars::io
