#include "bars/segment.hpp"

#include <algorithm>

#include "bars/error.hpp"

namespace bars {

Endpoints estimate_endpoints(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 8) throw Error(ErrorCode::InvalidArgument, "need at least 8 samples to estimate endpoints");
  const auto [lo, hi] = std::minmax_element(x.begin() + static_cast<std::ptrdiff_t>(n / 4),
                                            x.begin() + static_cast<std::ptrdiff_t>(3 * n / 4));
  if (!(*hi > *lo)) throw Error(ErrorCode::DegenerateRange, "middle half of the signal is flat");
  return {*lo, *hi};
}

Endpoints estimate_endpoints(const RelativeSignal& signal) { return estimate_endpoints(signal.x); }

std::vector<CrossingEvent> hysteresis_events(std::span<const double> x, const Endpoints& endpoints,
                                             double fwd_frac, double bwd_frac) {
  if (!(endpoints.far > endpoints.near))
    throw Error(ErrorCode::InvalidArgument, "endpoints must satisfy far > near");
  if (!(0.0 < bwd_frac && bwd_frac < fwd_frac && fwd_frac < 1.0))
    throw Error(ErrorCode::InvalidArgument, "thresholds must satisfy 0 < bwd < fwd < 1");
  if (x.empty()) throw Error(ErrorCode::NoEvents, "empty signal");

  const double range = endpoints.far - endpoints.near;
  const double upper = endpoints.near + fwd_frac * range;
  const double lower = endpoints.near + bwd_frac * range;
  const double midpoint = endpoints.near + 0.5 * range;

  std::vector<CrossingEvent> events;
  bool high = x[0] > midpoint;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (!high && x[t] > upper) {
      events.push_back({EventKind::Forward, t});
      high = true;
    } else if (high && x[t] < lower) {
      events.push_back({EventKind::Backward, t});
      high = false;
    }
  }
  if (events.empty()) throw Error(ErrorCode::NoEvents, "signal never crosses a threshold");
  return events;
}

std::string_view to_string(Designation d) {
  return d == Designation::FingerNoseFinger ? "finger_nose_finger" : "nose_finger_nose";
}

std::size_t count_cycles(std::span<const CrossingEvent> events, EventKind first_kind) {
  const auto it = std::find_if(events.begin(), events.end(),
                               [&](const CrossingEvent& e) { return e.kind == first_kind; });
  const auto remaining = static_cast<std::size_t>(events.end() - it);
  return remaining == 0 ? 0 : (remaining - 1) / 2;
}

CycleSet build_cycles(std::span<const CrossingEvent> events, std::size_t n_frames) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].kind == events[i - 1].kind)
      throw Error(ErrorCode::InvalidArgument, "events must alternate Forward/Backward");
    if (events[i].frame <= events[i - 1].frame)
      throw Error(ErrorCode::InvalidArgument, "events must be strictly increasing in time");
  }
  if (!events.empty() && events.back().frame >= n_frames)
    throw Error(ErrorCode::InvalidArgument, "event frame outside the signal");

  // Finger-nose-finger cycles run Backward -> Forward -> Backward.
  const std::size_t fnf = count_cycles(events, EventKind::Backward);
  const std::size_t nfn = count_cycles(events, EventKind::Forward);
  if (fnf == 0 && nfn == 0) throw Error(ErrorCode::NoCycles, "no complete cycle in the event sequence");

  CycleSet out;
  out.designation = fnf >= nfn ? Designation::FingerNoseFinger : Designation::NoseFingerNose;
  const EventKind first = fnf >= nfn ? EventKind::Backward : EventKind::Forward;
  const std::size_t count = std::max(fnf, nfn);

  const auto begin = static_cast<std::size_t>(
      std::find_if(events.begin(), events.end(), [&](const CrossingEvent& e) { return e.kind == first; }) -
      events.begin());
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t i = begin + 2 * c;
    out.cycles.push_back({events[i].frame, events[i + 1].frame, events[i + 2].frame});
  }

  const std::size_t covered_from = out.cycles.front().start;
  const std::size_t covered_to = out.cycles.back().end;
  if (covered_from > 0) out.discarded.push_back({0, covered_from});
  if (covered_to < n_frames) out.discarded.push_back({covered_to, n_frames});
  return out;
}

void validate(const CycleSet& set, std::size_t n_frames) {
  struct Piece {
    std::size_t from, to;
  };
  std::vector<Piece> pieces;
  for (const auto& c : set.cycles) {
    if (!(c.start < c.mid && c.mid < c.end))
      throw Error(ErrorCode::InvalidArgument, "cycle needs start < mid < end");
    pieces.push_back({c.start, c.end});
  }
  for (std::size_t i = 1; i < set.cycles.size(); ++i)
    if (set.cycles[i].start < set.cycles[i - 1].end)
      throw Error(ErrorCode::InvalidArgument, "cycles overlap or are out of order");
  for (const auto& d : set.discarded) pieces.push_back({d.from, d.to});

  std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.from < b.from; });
  std::size_t cursor = 0;
  for (const auto& p : pieces) {
    if (p.from != cursor || p.to <= p.from)
      throw Error(ErrorCode::InvalidArgument, "cycles and discarded spans do not tile the signal");
    cursor = p.to;
  }
  if (cursor != n_frames) throw Error(ErrorCode::InvalidArgument, "cycles and discarded spans do not tile the signal");
}

CycleSet segment_cycles(const RelativeSignal& signal, double fwd_frac, double bwd_frac) {
  const auto endpoints = estimate_endpoints(signal);
  const auto events = hysteresis_events(signal.x, endpoints, fwd_frac, bwd_frac);
  return build_cycles(events, signal.size());
}

}  // namespace bars
