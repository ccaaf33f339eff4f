#include "bars/stabilize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bars/error.hpp"

namespace bars {

namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

Point2 rotate(double angle, Point2 p) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

std::vector<double> residuals(const SimilarityTransform& t, std::span<const std::pair<Point2, Point2>> pairs) {
  std::vector<double> r;
  r.reserve(pairs.size());
  for (const auto& [src, dst] : pairs) r.push_back(distance(t.apply(src), dst));
  return r;
}

}  // namespace

Point2 SimilarityTransform::apply(Point2 p) const { return scale * rotate(rotation, p) + translation; }

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = wrap_angle(-rotation);
  inv.translation = -inv.scale * rotate(-rotation, translation);
  return inv;
}

SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner) {
  SimilarityTransform out;
  out.scale = outer.scale * inner.scale;
  out.rotation = wrap_angle(outer.rotation + inner.rotation);
  out.translation = outer.apply(inner.translation);
  return out;
}

SimilarityTransform fit_similarity(std::span<const std::pair<Point2, Point2>> pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::TooFewPoints, "need at least two correspondences");

  const double n = static_cast<double>(pairs.size());
  Point2 src_mean{}, dst_mean{};
  for (const auto& [src, dst] : pairs) {
    src_mean = src_mean + src;
    dst_mean = dst_mean + dst;
  }
  src_mean = (1.0 / n) * src_mean;
  dst_mean = (1.0 / n) * dst_mean;

  // a = sum <p, q>, b = sum p x q over centred points; the optimal rotation
  // is atan2(b, a) and the optimal scale |(a, b)| / sum |p|^2.
  double src_sq = 0.0, a = 0.0, b = 0.0, spread = 0.0;
  for (const auto& [src, dst] : pairs) {
    const Point2 p = src - src_mean;
    const Point2 q = dst - dst_mean;
    src_sq += p.x * p.x + p.y * p.y;
    a += p.x * q.x + p.y * q.y;
    b += p.x * q.y - p.y * q.x;
    spread = std::max({spread, std::abs(src.x), std::abs(src.y)});
  }
  const double eps = std::numeric_limits<double>::epsilon();
  if (!(src_sq > n * eps * eps * std::max(1.0, spread * spread)))
    throw Error(ErrorCode::DegenerateGeometry, "source points are coincident");

  SimilarityTransform t;
  t.rotation = std::atan2(b, a);
  t.scale = std::hypot(a, b) / src_sq;
  if (!(t.scale > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "destination points are coincident");
  t.translation = dst_mean - t.scale * rotate(t.rotation, src_mean);
  return t;
}

double residual_rms(const SimilarityTransform& t, std::span<const std::pair<Point2, Point2>> pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (double r : residuals(t, pairs)) sum += r * r;
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

SimilarityEstimate estimate_similarity(const PointCorrespondences& corr) {
  const std::span<const std::pair<Point2, Point2>> all(corr.pairs);
  SimilarityEstimate est{fit_similarity(all), 0.0, all.size()};

  auto r = residuals(est.transform, all);
  auto sorted = r;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double cutoff = 3.0 * *mid;

  std::vector<std::pair<Point2, Point2>> kept;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (r[i] <= cutoff) kept.push_back(all[i]);

  if (kept.size() < all.size() && kept.size() >= 2) {
    try {
      est.transform = fit_similarity(kept);
      est.inliers = kept.size();
      est.rms = residual_rms(est.transform, kept);
      return est;
    } catch (const Error&) {
      // Trimmed set collapsed; keep the untrimmed fit.
    }
  }
  est.rms = residual_rms(est.transform, all);
  return est;
}

std::vector<SimilarityTransform> to_reference_frame(std::span<const SimilarityTransform> per_gap) {
  std::vector<SimilarityTransform> out;
  out.reserve(per_gap.size() + 1);
  SimilarityTransform cumulative = SimilarityTransform::identity();
  out.push_back(cumulative);
  for (const auto& gap : per_gap) {
    cumulative = compose(gap, cumulative);
    out.push_back(cumulative.inverse());
  }
  return out;
}

namespace {

KeypointTrack map_track(const KeypointTrack& track, std::span<const SimilarityTransform> per_frame) {
  KeypointTrack out = track;
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    const Point2 p = per_frame[t].apply(out.frames[t].position());
    out.frames[t].x = p.x;
    out.frames[t].y = p.y;
  }
  return out;
}

void check_gap_count(const KeypointTrack& track, std::size_t gaps) {
  if (track.frames.size() != gaps + 1)
    throw Error(ErrorCode::LengthMismatch, "need exactly one transform per frame gap");
}

}  // namespace

KeypointTrack stabilize_track(const KeypointTrack& track, std::span<const SimilarityTransform> per_gap) {
  check_gap_count(track, per_gap.size());
  return map_track(track, to_reference_frame(per_gap));
}

KeypointTrack destabilize_track(const KeypointTrack& track, std::span<const SimilarityTransform> per_gap) {
  check_gap_count(track, per_gap.size());
  std::vector<SimilarityTransform> forward;
  forward.reserve(per_gap.size() + 1);
  SimilarityTransform cumulative = SimilarityTransform::identity();
  forward.push_back(cumulative);
  for (const auto& gap : per_gap) {
    cumulative = compose(gap, cumulative);
    forward.push_back(cumulative);
  }
  return map_track(track, forward);
}

std::vector<PointCorrespondences> background_correspondences(std::span<const KeypointTrack> background,
                                                             double conf_floor) {
  std::size_t frames = 0;
  for (const auto& track : background) frames = std::max(frames, track.frames.size());
  std::vector<PointCorrespondences> out(frames > 0 ? frames - 1 : 0);
  for (const auto& track : background) {
    for (std::size_t t = 0; t + 1 < track.frames.size(); ++t) {
      const auto& a = track.frames[t];
      const auto& b = track.frames[t + 1];
      if (a.confidence < conf_floor || b.confidence < conf_floor) continue;
      if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(b.x) || !std::isfinite(b.y)) continue;
      out[t].pairs.emplace_back(a.position(), b.position());
    }
  }
  return out;
}

StabilizationResult try_stabilize(std::span<const KeypointTrack> tracks,
                                  std::span<const PointCorrespondences> bg_corr, std::size_t min_points) {
  StabilizationResult passthrough{{tracks.begin(), tracks.end()}, false, {}, {}};
  if (bg_corr.empty() || tracks.empty()) return passthrough;
  for (const auto& track : tracks)
    if (track.frames.size() != bg_corr.size() + 1) return passthrough;

  std::vector<SimilarityTransform> per_gap;
  std::vector<double> rms;
  per_gap.reserve(bg_corr.size());
  for (const auto& corr : bg_corr) {
    if (corr.pairs.size() < std::max<std::size_t>(min_points, 2)) return passthrough;
    try {
      const auto est = estimate_similarity(corr);
      per_gap.push_back(est.transform);
      rms.push_back(est.rms);
    } catch (const Error&) {
      return passthrough;
    }
  }

  StabilizationResult out;
  out.stabilized = true;
  const auto to_ref = to_reference_frame(per_gap);
  for (const auto& track : tracks) out.tracks.push_back(map_track(track, to_ref));
  out.per_gap = std::move(per_gap);
  out.rms = std::move(rms);
  return out;
}

}  // namespace bars
