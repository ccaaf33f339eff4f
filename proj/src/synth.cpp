#include "bars/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "bars/error.hpp"
#include "bars/rng.hpp"

namespace bars {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// World layout, pixels. The wrist moves along +x from the nose to the
// examiner's finger; y points down.
constexpr Point2 kHead{300.0, 250.0};
constexpr Point2 kImageCentre{320.0, 240.0};
constexpr double kNearX = 30.0;
constexpr double kReach = 200.0;
constexpr double kRestY = -30.0;
constexpr double kLift = 30.0;
constexpr double kRippleX = 6.0;
constexpr double kRippleY = 6.0;
constexpr std::size_t kTrajectoryLength = 15;

enum Stream : std::uint64_t {
  kDurations = 1,
  kWristNoise,
  kHeadNoise,
  kConfidence,
  kFlowNoise,
  kBackgroundNoise,
  kCamera,
  kBackgroundLayout,
};

struct PhaseSegment {
  double start_s;
  double duration_s;
  double phase_from;
  double phase_to;
};

Point2 relative_wrist(double phase, double ripples) {
  const double reach = 0.5 * (1.0 - std::cos(kTwoPi * phase));
  const double ripple = kTwoPi * ripples * phase;
  return {kNearX + kReach * reach + kRippleX * std::sin(ripple),
          kRestY - kLift * reach + kRippleY * std::sin(ripple + 0.7)};
}

struct CameraPath {
  double zoom = 0.0, zoom_period = 1.0;
  double roll = 0.0, roll_period = 1.0;
  double pan_x = 0.0, pan_x_period = 1.0;
  double pan_y = 0.0, pan_y_period = 1.0;

  SimilarityTransform at(double t) const {
    const double s = 1.0 + zoom * std::sin(kTwoPi * t / zoom_period);
    const double theta = roll * std::sin(kTwoPi * t / roll_period);
    const Point2 pan{pan_x * std::sin(kTwoPi * t / pan_x_period), pan_y * std::sin(kTwoPi * t / pan_y_period)};
    SimilarityTransform about_centre{s, theta, {}};
    about_centre.translation = kImageCentre - about_centre.apply(kImageCentre) + pan;
    return about_centre;
  }
};

CameraPath draw_camera(const CameraDrift& drift, Rng& rng) {
  auto period = [&] { return rng.uniform(drift.min_period_s, drift.max_period_s); };
  auto sign = [&] { return rng.coin() ? 1.0 : -1.0; };
  CameraPath path;
  path.zoom = sign() * drift.zoom_amplitude;
  path.zoom_period = period();
  path.roll = sign() * drift.rotation_amplitude;
  path.roll_period = period();
  path.pan_x = sign() * drift.pan_amplitude;
  path.pan_x_period = period();
  path.pan_y = sign() * drift.pan_amplitude;
  path.pan_y_period = period();
  return path;
}

}  // namespace

void validate(const SynthParams& p) {
  if (!is_valid_bars_rating(p.severity)) throw Error(ErrorCode::InvalidArgument, "severity must be a half point in [0,4]");
  if (p.n_cycles < 2) throw Error(ErrorCode::InvalidArgument, "need at least two cycles");
  if (!(p.base_cycle_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "base cycle duration must be positive");
  if (!(p.fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");
}

SyntheticExam generate_exam(const SynthParams& params) {
  validate(params);
  const double sev = params.severity;
  const double ripples = 2.0 * sev;
  const double mean_s = params.base_cycle_s * (1.0 + 0.5 * sev);

  // Timeline: half cycle in from the finger, n full cycles from the nose,
  // half cycle out to the finger.
  Rng durations(stream_key(params.noise_seed, {kDurations}));
  std::vector<PhaseSegment> timeline;
  double clock = 0.0;
  timeline.push_back({clock, 0.5 * mean_s, 0.5, 1.0});
  clock += 0.5 * mean_s;
  for (int c = 0; c < params.n_cycles; ++c) {
    const double d = mean_s * std::max(0.4, 1.0 + 0.1 * sev * durations.normal());
    timeline.push_back({clock, d, 0.0, 1.0});
    clock += d;
  }
  timeline.push_back({clock, 0.5 * mean_s, 0.0, 0.5});
  clock += 0.5 * mean_s;

  const auto frames = static_cast<std::size_t>(std::floor(clock * params.fps)) + 1;
  std::vector<Point2> world_wrist(frames);
  std::size_t segment = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = std::min(static_cast<double>(f) / params.fps, clock);
    while (segment + 1 < timeline.size() && t >= timeline[segment + 1].start_s) ++segment;
    const auto& seg = timeline[segment];
    const double u = std::clamp((t - seg.start_s) / seg.duration_s, 0.0, 1.0);
    world_wrist[f] = kHead + relative_wrist(seg.phase_from + (seg.phase_to - seg.phase_from) * u, ripples);
  }

  std::vector<SimilarityTransform> camera(frames);
  if (params.camera_motion) {
    Rng rng(stream_key(params.noise_seed, {kCamera}));
    const auto path = draw_camera(*params.camera_motion, rng);
    for (std::size_t f = 0; f < frames; ++f) camera[f] = path.at(static_cast<double>(f) / params.fps);
  }

  SyntheticExam exam;
  exam.camera = camera;
  auto& rec = exam.record;
  rec.gold_rating = sev;
  rec.wrist = {JointLabel::wrist(), {}, params.fps};
  rec.head = {JointLabel::head(), {}, params.fps};
  exam.true_wrist = {JointLabel::wrist(), {}, params.fps};

  Rng wrist_noise(stream_key(params.noise_seed, {kWristNoise}));
  Rng head_noise(stream_key(params.noise_seed, {kHeadNoise}));
  Rng confidence(stream_key(params.noise_seed, {kConfidence}));
  for (std::size_t f = 0; f < frames; ++f) {
    exam.true_wrist.frames.push_back({world_wrist[f].x, world_wrist[f].y, 1.0});

    const bool dropout = confidence.uniform() < params.dropout_rate;
    double wrist_conf = confidence.uniform(0.6, 1.0);
    const double extra = dropout ? 15.0 : 0.0;
    if (dropout) wrist_conf = confidence.uniform(0.0, 0.15);
    const double sd = std::hypot(params.wrist_noise_px, extra);
    const Point2 noisy_wrist = world_wrist[f] + Point2{wrist_noise.normal(0.0, sd), wrist_noise.normal(0.0, sd)};
    const Point2 noisy_head =
        kHead + Point2{head_noise.normal(0.0, params.head_noise_px), head_noise.normal(0.0, params.head_noise_px)};
    const double head_conf = confidence.uniform(0.7, 1.0);

    const Point2 w = camera[f].apply(noisy_wrist);
    const Point2 h = camera[f].apply(noisy_head);
    rec.wrist.frames.push_back({w.x, w.y, wrist_conf});
    rec.head.frames.push_back({h.x, h.y, head_conf});
  }

  Rng flow_noise(stream_key(params.noise_seed, {kFlowNoise}));
  for (std::size_t f = 0; f + 1 < frames; ++f) {
    const Point2 d = camera[f + 1].apply(world_wrist[f + 1]) - camera[f].apply(world_wrist[f]);
    exam.flow.push_back({d.x + flow_noise.normal(0.0, params.flow_noise_px),
                         d.y + flow_noise.normal(0.0, params.flow_noise_px)});
  }

  Rng layout(stream_key(params.noise_seed, {kBackgroundLayout}));
  Rng bg_noise(stream_key(params.noise_seed, {kBackgroundNoise}));
  std::vector<Point2> bg_world;
  for (int k = 0; k < params.background_points; ++k) bg_world.push_back({layout.uniform(20.0, 620.0), layout.uniform(20.0, 460.0)});
  for (int k = 0; k < params.background_points; ++k) {
    KeypointTrack track{JointLabel::background(k), {}, params.fps};
    for (std::size_t f = 0; f < frames; ++f) {
      const Point2 p = camera[f].apply(bg_world[static_cast<std::size_t>(k)]);
      track.frames.push_back({p.x + bg_noise.normal(0.0, params.background_noise_px),
                              p.y + bg_noise.normal(0.0, params.background_noise_px), 1.0});
    }
    rec.background.push_back(std::move(track));
  }

  if (params.dense_trajectories) {
    int next_id = 0;
    auto add = [&](std::size_t start, auto&& world_at) {
      std::vector<Point2> pts;
      for (std::size_t f = start; f < std::min(frames, start + kTrajectoryLength); ++f)
        pts.push_back(camera[f].apply(world_at(f)));
      if (pts.size() >= 2) exam.trajectories.emplace_back(next_id++, start, std::move(pts));
    };
    for (std::size_t s = 0; s + 1 < frames; s += 5)
      for (Point2 offset : {Point2{-4.0, -3.0}, Point2{3.0, 4.0}})
        add(s, [&](std::size_t f) { return world_wrist[f] + offset; });
    for (std::size_t s = 0; s + 1 < frames; s += kTrajectoryLength) {
      add(s, [&](std::size_t) { return kHead; });
      for (std::size_t k = 0; k < std::min<std::size_t>(6, bg_world.size()); ++k)
        add(s, [&](std::size_t) { return bg_world[k]; });
    }
  }
  return exam;
}

std::array<int, 9> severity_counts(const std::array<double, 9>& weights, int n_patients) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "severity distribution has no mass");
  for (double w : weights)
    if (w < 0.0) throw Error(ErrorCode::InvalidArgument, "negative severity weight");

  std::array<int, 9> counts{};
  std::array<double, 9> remainder{};
  int assigned = 0;
  for (std::size_t k = 0; k < 9; ++k) {
    const double quota = weights[k] / total * n_patients;
    counts[k] = static_cast<int>(std::floor(quota));
    remainder[k] = quota - counts[k];
    assigned += counts[k];
  }
  std::array<std::size_t, 9> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n_patients; ++i, ++assigned) ++counts[order[i % 9]];
  return counts;
}

SyntheticDataset generate_dataset(const DatasetParams& params) {
  if (params.n_patients < 2) throw Error(ErrorCode::InvalidArgument, "need at least two patients");
  if (params.videos_per_patient < 1) throw Error(ErrorCode::InvalidArgument, "need at least one video per patient");
  if (params.min_cycles < 2 || params.max_cycles < params.min_cycles)
    throw Error(ErrorCode::InvalidArgument, "cycle range must satisfy 2 <= min <= max");

  SynthParams probe = params.exam;
  probe.severity = 0.0;
  probe.n_cycles = params.min_cycles;
  validate(probe);

  const auto counts = severity_counts(params.severity_distribution, params.n_patients);
  std::vector<double> levels;
  for (std::size_t k = 0; k < 9; ++k) levels.insert(levels.end(), static_cast<std::size_t>(counts[k]), 0.5 * k);
  Rng shuffle(stream_key(params.seed, {0x5e7}));
  for (std::size_t i = levels.size(); i > 1; --i) std::swap(levels[i - 1], levels[shuffle.below(i)]);

  SyntheticDataset out;
  out.patient_severity = levels;
  out.exams.resize(static_cast<std::size_t>(params.n_patients * params.videos_per_patient));

  // Exams are independent given their stream keys, so generation order
  // (and threading) does not change the output.
#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < params.n_patients; ++p) {
    const auto pu = static_cast<std::uint64_t>(p);
    Rng hand_rng(stream_key(params.seed, {pu, 0xde1}));
    const double u = hand_rng.uniform();
    const double left_offset = u < 0.25 ? -0.5 : (u < 0.5 ? 0.5 : 0.0);
    const double latent = levels[static_cast<std::size_t>(p)];

    for (int v = 0; v < params.videos_per_patient; ++v) {
      const auto vu = static_cast<std::uint64_t>(v);
      const Hand hand = v % 2 == 0 ? Hand::Right : Hand::Left;
      SynthParams exam_params = params.exam;
      exam_params.severity = hand == Hand::Right ? latent : std::clamp(latent + left_offset, 0.0, 4.0);
      Rng cycles(stream_key(params.seed, {pu, vu, 0xc1c}));
      exam_params.n_cycles =
          params.min_cycles + static_cast<int>(cycles.below(static_cast<std::uint64_t>(params.max_cycles - params.min_cycles + 1)));
      exam_params.noise_seed = stream_key(params.seed, {pu, vu});

      auto exam = generate_exam(exam_params);
      exam.record.patient_id = fmt::format("P{:03d}", p + 1);
      exam.record.video_id = fmt::format("P{:03d}_{}{}", p + 1, hand == Hand::Right ? "R" : "L", v / 2 + 1);
      exam.record.hand = hand;
      out.exams[static_cast<std::size_t>(p * params.videos_per_patient + v)] = std::move(exam);
    }
  }
  return out;
}

}  // namespace bars
