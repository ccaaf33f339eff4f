#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bars {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2, Point2) = default;
};

double distance(Point2 a, Point2 b);

/// Which body point (or background feature) a track follows. Background
/// tracks are numbered so several can live in one trajectory file.
struct JointLabel {
  enum class Kind { Wrist, HeadBottom, Background };

  Kind kind = Kind::Wrist;
  int background_index = 0;

  static JointLabel wrist() { return {Kind::Wrist, 0}; }
  static JointLabel head() { return {Kind::HeadBottom, 0}; }
  static JointLabel background(int index) { return {Kind::Background, index}; }

  friend bool operator==(const JointLabel&, const JointLabel&) = default;
};

/// Parses "wrist", "head" or "bg<k>"; std::nullopt for anything else.
std::optional<JointLabel> parse_joint(std::string_view text);
std::string format_joint(const JointLabel& label);

struct KeypointSample {
  double x = 0.0;
  double y = 0.0;
  double confidence = 1.0;

  Point2 position() const { return {x, y}; }
};

struct KeypointTrack {
  JointLabel joint;
  std::vector<KeypointSample> frames;
  double fps = 30.0;

  std::size_t size() const { return frames.size(); }
};

/// Throws InvalidArgument unless confidences lie in [0,1], fps > 0 and the
/// track has at least two frames.
void validate(const KeypointTrack& track);

/// Wrist position relative to the head, one sample per retained frame.
/// `first_frame` is the index of sample 0 in the source tracks (leading
/// invalid frames are trimmed away).
struct RelativeSignal {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<bool> valid;
  double fps = 30.0;
  std::size_t first_frame = 0;

  std::size_t size() const { return x.size(); }
};

enum class Hand { Left, Right };

std::optional<Hand> parse_hand(std::string_view text);
std::string_view to_string(Hand hand);

/// True for 0, 0.5, ..., 4.
bool is_valid_bars_rating(double rating);

struct VideoRecord {
  std::string video_id;
  std::string patient_id;
  Hand hand = Hand::Right;
  double gold_rating = 0.0;
  KeypointTrack wrist;
  KeypointTrack head;
  std::vector<KeypointTrack> background;
};

void validate(const VideoRecord& record);

inline constexpr double kDefaultConfidenceFloor = 0.2;

/// x[t] = wrist.x[t] - head.x[t] (y likewise). A frame is valid when both
/// confidences reach `conf_floor` and both positions are finite. Interior
/// invalid frames are filled by straight-line interpolation between the
/// nearest valid neighbours and stay flagged; leading and trailing invalid
/// runs are dropped.
RelativeSignal relative_signal(const KeypointTrack& wrist, const KeypointTrack& head,
                               double conf_floor = kDefaultConfidenceFloor);

/// Rescales x and y by 1/(max x - min x), the range taken over valid samples.
RelativeSignal normalize_units(const RelativeSignal& signal);

}  // namespace bars
