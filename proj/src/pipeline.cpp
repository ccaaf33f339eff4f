#include "bars/pipeline.hpp"

#include <algorithm>

#include "bars/error.hpp"

namespace bars {

namespace {

template <typename F>
auto run_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw StageError(stage, std::string(to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, "Internal", e.what());
  }
}

}  // namespace

std::vector<FlowSample> stabilize_flow(const KeypointTrack& wrist, std::span<const FlowSample> flow,
                                       std::span<const SimilarityTransform> to_reference) {
  std::vector<FlowSample> out;
  out.reserve(flow.size());
  for (std::size_t t = 0; t < flow.size() && t + 1 < to_reference.size() && t < wrist.frames.size(); ++t) {
    const Point2 from = wrist.frames[t].position();
    const Point2 to = from + Point2{flow[t].dx, flow[t].dy};
    const Point2 d = to_reference[t + 1].apply(to) - to_reference[t].apply(from);
    out.push_back({d.x, d.y});
  }
  return out;
}

std::vector<MotionTrajectory> stabilize_trajectories(std::span<const MotionTrajectory> trajectories,
                                                     std::span<const SimilarityTransform> to_reference) {
  std::vector<MotionTrajectory> out;
  out.reserve(trajectories.size());
  for (const auto& traj : trajectories) {
    std::vector<Point2> pts;
    pts.reserve(traj.points().size());
    for (std::size_t f = traj.start_frame(); f < traj.end_frame() && f < to_reference.size(); ++f)
      pts.push_back(to_reference[f].apply(traj.at(f)));
    out.emplace_back(traj.id(), traj.start_frame(), std::move(pts));
  }
  return out;
}

ProcessedVideo process_video(const VideoInputs& inputs, const PipelineConfig& config) {
  ProcessedVideo out;
  const auto& rec = inputs.record;
  run_stage("load", [&] { validate(rec); });

  KeypointTrack wrist = rec.wrist;
  KeypointTrack head = rec.head;
  std::vector<FlowSample> flow = inputs.flow;
  std::vector<MotionTrajectory> trajectories = inputs.trajectories;

  if (config.stabilize) {
    run_stage("stabilize", [&] {
      const auto corr = background_correspondences(rec.background, config.conf_floor);
      const std::vector<KeypointTrack> tracks{wrist, head};
      auto result = try_stabilize(tracks, corr, config.min_stabilization_points);
      if (!result.stabilized) return;
      const auto to_ref = to_reference_frame(result.per_gap);
      if (!flow.empty()) flow = stabilize_flow(wrist, flow, to_ref);
      if (!trajectories.empty()) trajectories = stabilize_trajectories(trajectories, to_ref);
      wrist = std::move(result.tracks[0]);
      head = std::move(result.tracks[1]);
      out.stabilized = true;
      out.transforms = std::move(result.per_gap);
      out.transform_rms = std::move(result.rms);
    });
  }

  run_stage("regularize", [&] {
    const double snap = default_snap_radius(wrist, config.snap_fraction, config.conf_floor);
    if (!flow.empty()) wrist = flow_smooth(wrist, flow, config.smoothing_window);
    if (!trajectories.empty()) {
      const auto region = fastest_region(trajectories, config.top_fraction);
      wrist = constrain_to_region(wrist, region, snap);
    }
  });

  out.signal = run_stage("signal", [&] { return relative_signal(wrist, head, config.conf_floor); });

  run_stage("segment", [&] {
    out.signal = normalize_units(out.signal);
    out.cycles = segment_cycles(out.signal, config.forward_fraction, config.backward_fraction);
  });

  out.features = run_stage("features", [&] { return featurize(out.signal, out.cycles, out.signal.fps); });
  return out;
}

}  // namespace bars
