#include "bars/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "bars/error.hpp"

namespace bars {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::optional<JointLabel> parse_joint(std::string_view text) {
  if (text == "wrist") return JointLabel::wrist();
  if (text == "head") return JointLabel::head();
  if (text.size() > 2 && text.substr(0, 2) == "bg") {
    int index = 0;
    auto digits = text.substr(2);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && index >= 0)
      return JointLabel::background(index);
  }
  return std::nullopt;
}

std::string format_joint(const JointLabel& label) {
  switch (label.kind) {
    case JointLabel::Kind::Wrist: return "wrist";
    case JointLabel::Kind::HeadBottom: return "head";
    case JointLabel::Kind::Background: return "bg" + std::to_string(label.background_index);
  }
  return "wrist";
}

void validate(const KeypointTrack& track) {
  if (!(track.fps > 0.0) || !std::isfinite(track.fps))
    throw Error(ErrorCode::InvalidArgument, "track fps must be positive");
  if (track.frames.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "track needs at least two frames");
  for (const auto& f : track.frames) {
    if (!(f.confidence >= 0.0 && f.confidence <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "confidence outside [0,1]");
  }
}

std::optional<Hand> parse_hand(std::string_view text) {
  if (text == "left" || text == "L") return Hand::Left;
  if (text == "right" || text == "R") return Hand::Right;
  return std::nullopt;
}

std::string_view to_string(Hand hand) { return hand == Hand::Left ? "left" : "right"; }

bool is_valid_bars_rating(double rating) {
  if (!std::isfinite(rating) || rating < 0.0 || rating > 4.0) return false;
  const double doubled = rating * 2.0;
  return doubled == std::floor(doubled);
}

void validate(const VideoRecord& record) {
  if (record.patient_id.empty())
    throw Error(ErrorCode::InvalidArgument, "video " + record.video_id + " has no patient id");
  if (!is_valid_bars_rating(record.gold_rating))
    throw Error(ErrorCode::InvalidArgument, "video " + record.video_id + " has an invalid BARS rating");
  validate(record.wrist);
  validate(record.head);
}

RelativeSignal relative_signal(const KeypointTrack& wrist, const KeypointTrack& head,
                               double conf_floor) {
  if (wrist.size() != head.size())
    throw Error(ErrorCode::LengthMismatch, "wrist and head tracks differ in length");
  if (wrist.fps != head.fps)
    throw Error(ErrorCode::LengthMismatch, "wrist and head tracks differ in frame rate");

  const std::size_t n = wrist.size();
  std::vector<double> x(n), y(n);
  std::vector<bool> valid(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& w = wrist.frames[t];
    const auto& h = head.frames[t];
    x[t] = w.x - h.x;
    y[t] = w.y - h.y;
    valid[t] = w.confidence >= conf_floor && h.confidence >= conf_floor &&
               std::isfinite(x[t]) && std::isfinite(y[t]);
  }

  const auto first = std::find(valid.begin(), valid.end(), true);
  if (first == valid.end())
    throw Error(ErrorCode::AllInvalid, "no frame clears the confidence floor");
  const auto begin = static_cast<std::size_t>(first - valid.begin());
  const auto end = n - static_cast<std::size_t>(std::find(valid.rbegin(), valid.rend(), true) - valid.rbegin());

  RelativeSignal out;
  out.fps = wrist.fps;
  out.first_frame = begin;
  out.x.assign(x.begin() + begin, x.begin() + end);
  out.y.assign(y.begin() + begin, y.begin() + end);
  out.valid.assign(valid.begin() + begin, valid.begin() + end);

  // Fill interior gaps; both ends of every gap are valid after trimming.
  std::size_t last_valid = 0;
  for (std::size_t t = 1; t < out.size(); ++t) {
    if (!out.valid[t]) continue;
    if (t - last_valid > 1) {
      const double span = static_cast<double>(t - last_valid);
      for (std::size_t k = last_valid + 1; k < t; ++k) {
        const double a = static_cast<double>(k - last_valid) / span;
        out.x[k] = (1.0 - a) * out.x[last_valid] + a * out.x[t];
        out.y[k] = (1.0 - a) * out.y[last_valid] + a * out.y[t];
      }
    }
    last_valid = t;
  }
  return out;
}

RelativeSignal normalize_units(const RelativeSignal& signal) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t count = 0;
  for (std::size_t t = 0; t < signal.size(); ++t) {
    if (!signal.valid[t]) continue;
    lo = std::min(lo, signal.x[t]);
    hi = std::max(hi, signal.x[t]);
    ++count;
  }
  if (count < 2 || !(hi > lo))
    throw Error(ErrorCode::DegenerateRange, "x has zero range over valid samples");

  const double scale = 1.0 / (hi - lo);
  RelativeSignal out = signal;
  for (auto& v : out.x) v *= scale;
  for (auto& v : out.y) v *= scale;
  return out;
}

}  // namespace bars
