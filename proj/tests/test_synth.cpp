#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bars/error.hpp"
#include "bars/features.hpp"
#include "bars/pipeline.hpp"
#include "bars/segment.hpp"
#include "bars/synth.hpp"

using namespace bars;

namespace {

bool same_track(const KeypointTrack& a, const KeypointTrack& b) {
  if (a.frames.size() != b.frames.size()) return false;
  for (std::size_t i = 0; i < a.frames.size(); ++i)
    if (a.frames[i].x != b.frames[i].x || a.frames[i].y != b.frames[i].y ||
        a.frames[i].confidence != b.frames[i].confidence)
      return false;
  return true;
}

ProcessedVideo run(const SyntheticExam& exam) {
  VideoInputs in{exam.record, exam.flow, exam.trajectories};
  in.record.video_id = "v";
  in.record.patient_id = "p";
  return process_video(in, {});
}

}  // namespace

TEST(GenerateExam, Deterministic) {
  SynthParams p;
  p.severity = 2.5;
  p.noise_seed = 42;
  p.camera_motion = CameraDrift{};
  const auto a = generate_exam(p), b = generate_exam(p);
  EXPECT_TRUE(same_track(a.record.wrist, b.record.wrist));
  EXPECT_TRUE(same_track(a.record.head, b.record.head));
  ASSERT_EQ(a.flow.size(), b.flow.size());
  for (std::size_t i = 0; i < a.flow.size(); ++i) EXPECT_EQ(a.flow[i].dx, b.flow[i].dx);
  p.noise_seed = 43;
  EXPECT_FALSE(same_track(a.record.wrist, generate_exam(p).record.wrist));
}

TEST(GenerateExam, RejectsBadParams) {
  SynthParams p;
  p.n_cycles = 1;
  EXPECT_THROW(generate_exam(p), Error);
  p = {};
  p.severity = 1.25;
  EXPECT_THROW(generate_exam(p), Error);
  p = {};
  p.base_cycle_s = 0.0;
  EXPECT_THROW(generate_exam(p), Error);
}

TEST(GenerateExam, CleanExamSegmentsIntoExactCycles) {
  for (int n : {2, 5, 8, 10}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      SynthParams p;
      p.n_cycles = n;
      p.noise_seed = seed;
      const auto v = run(generate_exam(p));
      EXPECT_EQ(v.cycles.size(), static_cast<std::size_t>(n)) << n << " seed " << seed;
      EXPECT_LT(v.features.std_cycle_s, 0.05);
    }
  }
}

TEST(GenerateExam, SeverityRaisesDurationAndDirectionChanges) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthParams p;
    p.noise_seed = seed;
    const auto mild = run(generate_exam(p));
    p.severity = 4.0;
    const auto severe = run(generate_exam(p));
    EXPECT_GT(severe.features.log_mean_cycle_s, mild.features.log_mean_cycle_s);
    EXPECT_GT(severe.features.dirchg_x_per_cycle, mild.features.dirchg_x_per_cycle);
  }
}

TEST(GenerateExam, StabilizationRecoversDriftFreeWrist) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    SynthParams p;
    p.severity = 0.5 * static_cast<double>(seed);
    p.noise_seed = seed;
    const auto still = generate_exam(p);
    p.camera_motion = CameraDrift{};
    const auto drift = generate_exam(p);

    const auto corr = background_correspondences(drift.record.background, kDefaultConfidenceFloor);
    const std::vector<KeypointTrack> tracks{drift.record.wrist};
    const auto result = try_stabilize(tracks, corr, kDefaultMinStabilizationPoints);
    ASSERT_TRUE(result.stabilized);

    const auto& ref = still.record.wrist.frames;
    const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end(), [](auto& a, auto& b) { return a.x < b.x; });
    const double range = hi->x - lo->x;
    double worst = 0.0;
    for (std::size_t f = 0; f < ref.size(); ++f) {
      const auto& s = result.tracks[0].frames[f];
      worst = std::max(worst, std::hypot(s.x - ref[f].x, s.y - ref[f].y));
    }
    EXPECT_LT(worst, 0.01 * range) << "seed " << seed;
  }
}

TEST(GenerateDataset, CountsAndPatients) {
  DatasetParams p;
  p.n_patients = 3;
  p.seed = 5;
  const auto d = generate_dataset(p);
  ASSERT_EQ(d.exams.size(), 6u);
  std::set<std::string> patients, videos;
  for (const auto& e : d.exams) {
    patients.insert(e.record.patient_id);
    videos.insert(e.record.video_id);
    EXPECT_TRUE(is_valid_bars_rating(e.record.gold_rating));
  }
  EXPECT_EQ(patients.size(), 3u);
  EXPECT_EQ(videos.size(), 6u);
}

TEST(GenerateDataset, HandsDifferByAtMostHalfPoint) {
  DatasetParams p;
  p.seed = 6;
  const auto d = generate_dataset(p);
  for (std::size_t i = 0; i + 1 < d.exams.size(); i += 2) {
    ASSERT_EQ(d.exams[i].record.patient_id, d.exams[i + 1].record.patient_id);
    EXPECT_LE(std::abs(d.exams[i].record.gold_rating - d.exams[i + 1].record.gold_rating), 0.5);
  }
}

TEST(GenerateDataset, SeverityHistogramFollowsWeights) {
  DatasetParams p;
  p.n_patients = 37;
  p.severity_distribution = {3, 1, 0, 2, 0, 1, 0, 0, 2};
  p.videos_per_patient = 1;
  const auto d = generate_dataset(p);
  std::array<int, 9> seen{};
  for (double s : d.patient_severity) ++seen[static_cast<std::size_t>(std::lround(2 * s))];
  const auto expected = severity_counts(p.severity_distribution, p.n_patients);
  EXPECT_EQ(seen, expected);
  const double total = 9.0;
  for (std::size_t k = 0; k < 9; ++k) {
    const double quota = p.severity_distribution[k] / total * p.n_patients;
    EXPECT_GE(expected[k], std::floor(quota));
    EXPECT_LE(expected[k], std::ceil(quota));
  }
}

TEST(GenerateDataset, Reproducible) {
  DatasetParams p;
  p.n_patients = 4;
  p.seed = 9;
  const auto a = generate_dataset(p), b = generate_dataset(p);
  for (std::size_t i = 0; i < a.exams.size(); ++i) {
    EXPECT_EQ(a.exams[i].record.video_id, b.exams[i].record.video_id);
    EXPECT_TRUE(same_track(a.exams[i].record.wrist, b.exams[i].record.wrist));
  }
}
