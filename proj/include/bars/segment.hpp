#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "bars/signal.hpp"

namespace bars {

/// Motion endpoints along x: `near` is the head side (minimum), `far` the
/// examiner's finger side (maximum).
struct Endpoints {
  double near = 0.0;
  double far = 1.0;
};

/// Min and max of x over the middle half, samples [floor(N/4), floor(3N/4)).
Endpoints estimate_endpoints(std::span<const double> x);
Endpoints estimate_endpoints(const RelativeSignal& signal);

enum class EventKind { Forward, Backward };

struct CrossingEvent {
  EventKind kind = EventKind::Forward;
  std::size_t frame = 0;  // first sample strictly past the threshold

  friend bool operator==(const CrossingEvent&, const CrossingEvent&) = default;
};

inline constexpr double kDefaultForwardFraction = 0.6;
inline constexpr double kDefaultBackwardFraction = 0.4;

/// Two-threshold state machine. In the low state a sample above
/// near + fwd_frac*(far-near) emits Forward; in the high state a sample
/// below near + bwd_frac*(far-near) emits Backward. The machine starts high
/// iff the first sample lies above the midpoint.
std::vector<CrossingEvent> hysteresis_events(std::span<const double> x, const Endpoints& endpoints,
                                             double fwd_frac = kDefaultForwardFraction,
                                             double bwd_frac = kDefaultBackwardFraction);

enum class Designation { FingerNoseFinger, NoseFingerNose };

std::string_view to_string(Designation d);

/// A cycle spans samples [start, end]; `mid` splits it into two halves.
struct Cycle {
  std::size_t start = 0;
  std::size_t mid = 0;
  std::size_t end = 0;

  friend bool operator==(const Cycle&, const Cycle&) = default;
};

/// Half-open frame interval [from, to).
struct FrameSpan {
  std::size_t from = 0;
  std::size_t to = 0;

  friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

struct CycleSet {
  Designation designation = Designation::FingerNoseFinger;
  std::vector<Cycle> cycles;
  std::vector<FrameSpan> discarded;

  std::size_t size() const { return cycles.size(); }
};

/// Number of complete cycles that start at `first_kind` events.
std::size_t count_cycles(std::span<const CrossingEvent> events, EventKind first_kind);

/// Picks the designation yielding more complete cycles (ties go to
/// finger-nose-finger). Consecutive cycles share their boundary event.
/// Frames outside [first start, last end) become discarded spans.
CycleSet build_cycles(std::span<const CrossingEvent> events, std::size_t n_frames);

/// Throws InvalidArgument when the cycle set breaks ordering or coverage.
void validate(const CycleSet& cycles, std::size_t n_frames);

/// endpoints -> events -> cycles on the signal's x component.
CycleSet segment_cycles(const RelativeSignal& signal, double fwd_frac = kDefaultForwardFraction,
                        double bwd_frac = kDefaultBackwardFraction);

}  // namespace bars
