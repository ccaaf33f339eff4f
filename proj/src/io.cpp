#include "bars/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "bars/error.hpp"

namespace bars::io {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Schema, fmt::format("{}:{}: {}", path.string(), line, what));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

/// Line-oriented CSV reader that checks the header and column count and
/// reports failures as path:line.
class CsvReader {
 public:
  CsvReader(fs::path path, std::vector<std::string_view> header) : path_(std::move(path)) {
    in_.open(path_);
    if (!in_) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path_.string()));
    std::string line;
    if (!std::getline(in_, line)) schema_error(path_, 1, "missing header row");
    line_no_ = 1;
    const auto got = split(line);
    const bool match = got.size() == header.size() && std::equal(got.begin(), got.end(), header.begin());
    if (!match) schema_error(path_, 1, fmt::format("expected header '{}', got '{}'", fmt::join(header, ","), line));
    columns_ = header.size();
  }

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty() || line == "\r") continue;
      fields = split(line);
      if (fields.size() != columns_)
        fail(fmt::format("expected {} fields, got {}", columns_, fields.size()));
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { schema_error(path_, line_no_, what); }

  double number(const std::string& field, std::string_view name) const {
    double v = 0.0;
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc{} || ptr != end) fail(fmt::format("{}: not a number: '{}'", name, field));
    return v;
  }

  long long integer(const std::string& field, std::string_view name) const {
    long long v = 0;
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc{} || ptr != end) fail(fmt::format("{}: not an integer: '{}'", name, field));
    return v;
  }

  std::size_t index(const std::string& field, std::string_view name) const {
    const long long v = integer(field, name);
    if (v < 0) fail(fmt::format("{}: negative: {}", name, v));
    return static_cast<std::size_t>(v);
  }

  std::size_t line() const { return line_no_; }

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::size_t columns_ = 0;
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  return out;
}

constexpr std::array<std::string_view, 5> kTrajectoryHeader = {"frame", "joint", "x", "y", "confidence"};
constexpr std::array<std::string_view, 3> kFlowHeader = {"frame", "dx", "dy"};
constexpr std::array<std::string_view, 4> kDenseHeader = {"traj_id", "frame", "x", "y"};
constexpr std::array<std::string_view, 8> kManifestHeader = {
    "video_id", "patient_id", "hand", "gold_rating", "fps", "trajectory_path", "flow_path", "trajectories_path"};
constexpr std::array<std::string_view, 3> kRaterHeader = {"video_id", "rater_id", "rating"};

template <std::size_t N>
std::vector<std::string_view> header_of(const std::array<std::string_view, N>& h) {
  return {h.begin(), h.end()};
}

std::vector<std::string_view> features_header() {
  std::vector<std::string_view> h{"video_id", "patient_id", "hand", "gold_rating"};
  h.insert(h.end(), kFeatureNames.begin(), kFeatureNames.end());
  return h;
}

std::string join_fields(const std::vector<std::string>& fields) { return fmt::format("{}", fmt::join(fields, ",")); }

std::string path_field(const fs::path& p) { return p.generic_string(); }

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

TrajectoryFile read_trajectory_csv(const fs::path& path, double fps) {
  CsvReader csv(path, header_of(kTrajectoryHeader));
  // Keyed by (kind, bg index) so background tracks come out in index order.
  std::map<std::pair<int, int>, std::map<std::size_t, KeypointSample>> by_joint;
  std::vector<std::string> f;
  while (csv.next(f)) {
    const std::size_t frame = csv.index(f[0], "frame");
    const auto joint = parse_joint(f[1]);
    if (!joint) csv.fail(fmt::format("unknown joint '{}'", f[1]));
    KeypointSample s{csv.number(f[2], "x"), csv.number(f[3], "y"), csv.number(f[4], "confidence")};
    auto& track = by_joint[{static_cast<int>(joint->kind), joint->background_index}];
    if (!track.emplace(frame, s).second) csv.fail(fmt::format("duplicate frame {} for joint {}", frame, f[1]));
  }

  TrajectoryFile out;
  bool have_wrist = false, have_head = false;
  std::size_t n_frames = 0;
  for (const auto& [key, samples] : by_joint) {
    KeypointTrack track;
    track.joint = {static_cast<JointLabel::Kind>(key.first), key.second};
    track.fps = fps;
    std::size_t expect = 0;
    for (const auto& [frame, s] : samples) {
      if (frame != expect)
        schema_error(path, csv.line(), fmt::format("joint {} is missing frame {}", format_joint(track.joint), expect));
      track.frames.push_back(s);
      ++expect;
    }
    if (n_frames == 0) n_frames = track.frames.size();
    if (track.frames.size() != n_frames)
      schema_error(path, csv.line(), fmt::format("joint {} has {} frames, expected {}", format_joint(track.joint),
                                                 track.frames.size(), n_frames));
    switch (track.joint.kind) {
      case JointLabel::Kind::Wrist:
        out.wrist = std::move(track);
        have_wrist = true;
        break;
      case JointLabel::Kind::HeadBottom:
        out.head = std::move(track);
        have_head = true;
        break;
      case JointLabel::Kind::Background:
        out.background.push_back(std::move(track));
        break;
    }
  }
  if (!have_wrist) schema_error(path, csv.line(), "no wrist rows");
  if (!have_head) schema_error(path, csv.line(), "no head rows");
  return out;
}

void write_trajectory_csv(const fs::path& path, const VideoRecord& record) {
  auto out = open_out(path);
  out << fmt::format("{}\n", fmt::join(kTrajectoryHeader, ","));
  std::vector<const KeypointTrack*> tracks{&record.wrist, &record.head};
  for (const auto& bg : record.background) tracks.push_back(&bg);
  const std::size_t n = record.wrist.frames.size();
  for (std::size_t t = 0; t < n; ++t) {
    for (const auto* track : tracks) {
      if (t >= track->frames.size()) continue;
      const auto& s = track->frames[t];
      out << t << ',' << format_joint(track->joint) << ',' << format_double(s.x) << ',' << format_double(s.y) << ','
          << format_double(s.confidence) << '\n';
    }
  }
}

std::vector<FlowSample> read_flow_csv(const fs::path& path) {
  CsvReader csv(path, header_of(kFlowHeader));
  std::vector<FlowSample> out;
  std::vector<std::string> f;
  while (csv.next(f)) {
    const std::size_t frame = csv.index(f[0], "frame");
    if (frame != out.size()) csv.fail(fmt::format("expected frame {}, got {}", out.size(), frame));
    out.push_back({csv.number(f[1], "dx"), csv.number(f[2], "dy")});
  }
  return out;
}

void write_flow_csv(const fs::path& path, const std::vector<FlowSample>& flow) {
  auto out = open_out(path);
  out << fmt::format("{}\n", fmt::join(kFlowHeader, ","));
  for (std::size_t t = 0; t < flow.size(); ++t)
    out << t << ',' << format_double(flow[t].dx) << ',' << format_double(flow[t].dy) << '\n';
}

std::vector<MotionTrajectory> read_dense_trajectories_csv(const fs::path& path) {
  CsvReader csv(path, header_of(kDenseHeader));
  struct Pending {
    std::size_t start = 0;
    std::vector<Point2> points;
  };
  std::vector<int> order;
  std::map<int, Pending> pending;
  std::vector<std::string> f;
  while (csv.next(f)) {
    const long long id = csv.integer(f[0], "traj_id");
    if (id < std::numeric_limits<int>::min() || id > std::numeric_limits<int>::max()) csv.fail("traj_id out of range");
    const std::size_t frame = csv.index(f[1], "frame");
    const Point2 p{csv.number(f[2], "x"), csv.number(f[3], "y")};
    auto [it, inserted] = pending.try_emplace(static_cast<int>(id));
    if (inserted) {
      order.push_back(static_cast<int>(id));
      it->second.start = frame;
    } else if (frame != it->second.start + it->second.points.size()) {
      csv.fail(fmt::format("trajectory {} frames are not consecutive at frame {}", id, frame));
    }
    it->second.points.push_back(p);
  }
  std::vector<MotionTrajectory> out;
  out.reserve(order.size());
  for (int id : order) {
    auto& p = pending[id];
    out.emplace_back(id, p.start, std::move(p.points));
  }
  return out;
}

void write_dense_trajectories_csv(const fs::path& path, const std::vector<MotionTrajectory>& trajectories) {
  auto out = open_out(path);
  out << fmt::format("{}\n", fmt::join(kDenseHeader, ","));
  for (const auto& traj : trajectories) {
    for (std::size_t k = 0; k < traj.points().size(); ++k) {
      const auto& p = traj.points()[k];
      out << traj.id() << ',' << traj.start_frame() + k << ',' << format_double(p.x) << ',' << format_double(p.y)
          << '\n';
    }
  }
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  CsvReader csv(path, header_of(kManifestHeader));
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& field) { return fs::path(field).is_absolute() ? fs::path(field) : base / field; };

  std::vector<ManifestEntry> out;
  std::set<std::string> seen;
  std::vector<std::string> f;
  while (csv.next(f)) {
    ManifestEntry e;
    e.video_id = f[0];
    e.patient_id = f[1];
    if (e.video_id.empty()) csv.fail("empty video_id");
    if (e.patient_id.empty()) csv.fail("empty patient_id");
    if (!seen.insert(e.video_id).second) csv.fail(fmt::format("duplicate video_id '{}'", e.video_id));
    const auto hand = parse_hand(f[2]);
    if (!hand) csv.fail(fmt::format("hand must be left or right, got '{}'", f[2]));
    e.hand = *hand;
    e.gold_rating = csv.number(f[3], "gold_rating");
    if (!is_valid_bars_rating(e.gold_rating)) csv.fail(fmt::format("gold_rating {} is not a BARS rating", f[3]));
    e.fps = csv.number(f[4], "fps");
    if (!(e.fps > 0.0)) csv.fail("fps must be positive");
    if (f[5].empty()) csv.fail("empty trajectory_path");
    e.trajectory_path = resolve(f[5]);
    if (!f[6].empty()) e.flow_path = resolve(f[6]);
    if (!f[7].empty()) e.trajectories_path = resolve(f[7]);
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  auto out = open_out(path);
  out << fmt::format("{}\n", fmt::join(kManifestHeader, ","));
  for (const auto& e : entries) {
    out << join_fields({e.video_id, e.patient_id, std::string(to_string(e.hand)), format_double(e.gold_rating),
                        format_double(e.fps), path_field(e.trajectory_path),
                        e.flow_path ? path_field(*e.flow_path) : "",
                        e.trajectories_path ? path_field(*e.trajectories_path) : ""})
        << '\n';
  }
}

bool looks_like_manifest(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return false;
  const auto got = split(line);
  return got.size() == kManifestHeader.size() && std::equal(got.begin(), got.end(), kManifestHeader.begin());
}

VideoInputs load_video(const ManifestEntry& entry) {
  VideoInputs in;
  auto traj = read_trajectory_csv(entry.trajectory_path, entry.fps);
  in.record.video_id = entry.video_id;
  in.record.patient_id = entry.patient_id;
  in.record.hand = entry.hand;
  in.record.gold_rating = entry.gold_rating;
  in.record.wrist = std::move(traj.wrist);
  in.record.head = std::move(traj.head);
  in.record.background = std::move(traj.background);
  if (entry.flow_path) in.flow = read_flow_csv(*entry.flow_path);
  if (entry.trajectories_path) in.trajectories = read_dense_trajectories_csv(*entry.trajectories_path);
  return in;
}

std::vector<FeatureRow> read_features_csv(const fs::path& path) {
  CsvReader csv(path, features_header());
  std::vector<FeatureRow> out;
  std::vector<std::string> f;
  while (csv.next(f)) {
    FeatureRow row;
    row.video_id = f[0];
    row.patient_id = f[1];
    if (row.video_id.empty() || row.patient_id.empty()) csv.fail("empty video_id or patient_id");
    const auto hand = parse_hand(f[2]);
    if (!hand) csv.fail(fmt::format("hand must be left or right, got '{}'", f[2]));
    row.hand = *hand;
    row.gold_rating = csv.number(f[3], "gold_rating");
    if (!is_valid_bars_rating(row.gold_rating)) csv.fail(fmt::format("gold_rating {} is not a BARS rating", f[3]));
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      row.features[j] = csv.number(f[4 + j], kFeatureNames[j]);
      if (!std::isfinite(row.features[j])) csv.fail(fmt::format("{} is not finite", kFeatureNames[j]));
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  out << fmt::format("{}\n", fmt::join(features_header(), ","));
  for (const auto& row : rows) {
    std::vector<std::string> fields{row.video_id, row.patient_id, std::string(to_string(row.hand)),
                                    format_double(row.gold_rating)};
    for (double v : row.features) fields.push_back(format_double(v));
    out << join_fields(fields) << '\n';
  }
}

void write_features_csv(const fs::path& path, const std::vector<FeatureRow>& rows) {
  auto out = open_out(path);
  write_features_csv(out, rows);
}

json model_to_json(const RatingModel& model) {
  return json{{"feature_names", model.feature_names}, {"means", model.means},         {"scales", model.scales},
              {"weights", model.weights},             {"intercept", model.intercept}, {"lambda", model.lambda}};
}

RatingModel model_from_json(const json& j) {
  RatingModel m;
  try {
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.means = j.at("means").get<std::vector<double>>();
    m.scales = j.at("scales").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.lambda = j.at("lambda").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, fmt::format("model: {}", e.what()));
  }
  const bool names_ok = m.feature_names.size() == kFeatureCount &&
                        std::equal(m.feature_names.begin(), m.feature_names.end(), kFeatureNames.begin());
  if (!names_ok)
    throw Error(ErrorCode::Schema,
                fmt::format("model: feature_names [{}] do not match the canonical names", fmt::join(m.feature_names, ",")));
  if (m.means.size() != kFeatureCount || m.scales.size() != kFeatureCount || m.weights.size() != kFeatureCount)
    throw Error(ErrorCode::Schema, fmt::format("model: means, scales and weights need {} entries", kFeatureCount));
  return m;
}

void save_model(const fs::path& path, const RatingModel& model) { write_json(path, model_to_json(model)); }

RatingModel load_model(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Schema, fmt::format("{}: {}", path.string(), e.what()));
  }
  try {
    return model_from_json(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::Schema, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_predictions_csv(const fs::path& path, const std::vector<Prediction>& predictions) {
  auto out = open_out(path);
  out << "video_id,predicted_raw,predicted_rounded\n";
  for (const auto& p : predictions)
    out << p.video_id << ',' << format_double(p.raw) << ',' << format_double(p.rounded) << '\n';
}

RaterMatrix read_raters_csv(const fs::path& path) {
  CsvReader csv(path, header_of(kRaterHeader));
  RaterMatrix out;
  std::map<std::string, std::size_t> index;
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<std::string> f;
  while (csv.next(f)) {
    if (f[0].empty() || f[1].empty()) csv.fail("empty video_id or rater_id");
    if (!seen.emplace(f[0], f[1]).second) csv.fail(fmt::format("duplicate rating by {} for {}", f[1], f[0]));
    const double rating = csv.number(f[2], "rating");
    if (!is_valid_bars_rating(rating)) csv.fail(fmt::format("rating {} is not a BARS rating", f[2]));
    auto [it, inserted] = index.try_emplace(f[0], out.size());
    if (inserted) out.push_back({f[0], std::nullopt, {}});
    auto& entry = out[it->second];
    if (f[1] == "gold")
      entry.gold = rating;
    else
      entry.specialists.push_back(rating);
  }
  return out;
}

json segmentation_to_json(const CycleSet& cycles) {
  json c = json::array();
  for (const auto& cy : cycles.cycles) c.push_back({{"start", cy.start}, {"mid", cy.mid}, {"end", cy.end}});
  json d = json::array();
  for (const auto& span : cycles.discarded) d.push_back({{"from", span.from}, {"to", span.to}});
  return json{{"designation", std::string(to_string(cycles.designation))}, {"cycles", c}, {"discarded", d}};
}

json transforms_to_json(const std::vector<SimilarityTransform>& per_gap, const std::vector<double>& rms) {
  json out = json::array();
  for (std::size_t t = 0; t < per_gap.size(); ++t) {
    const auto& tr = per_gap[t];
    out.push_back({{"frame", t},
                   {"scale", tr.scale},
                   {"rotation", tr.rotation},
                   {"tx", tr.translation.x},
                   {"ty", tr.translation.y},
                   {"rms", t < rms.size() ? json(rms[t]) : json(nullptr)}});
  }
  return out;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json range_json(const std::optional<RangeAgreement>& r) {
  if (!r) return nullptr;
  return json{{"within", r->within}, {"relaxed", r->relaxed}};
}

json mean_se_json(const MeanWithError& m) {
  return json{{"mean", m.mean}, {"standard_error", m.standard_error}, {"samples", m.samples}};
}

}  // namespace

json report_to_json(const EvaluationReport& report) {
  json per_video = json::array();
  for (const auto& v : report.per_video)
    per_video.push_back({{"video_id", v.video_id},
                         {"patient_id", v.patient_id},
                         {"gold", v.gold},
                         {"predicted_raw", v.predicted_raw},
                         {"predicted_rounded", v.predicted_rounded}});
  json folds = json::array();
  for (const auto& f : report.folds)
    folds.push_back({{"patient_id", f.patient_id}, {"lambda", f.lambda}, {"converged", f.converged}});
  json excluded = json::array();
  for (const auto& e : report.excluded)
    excluded.push_back({{"video_id", e.video_id}, {"stage", e.stage}, {"reason", e.reason}});
  json hist = json::object();
  for (std::size_t k = 0; k < report.histogram.counts.size(); ++k)
    hist[fmt::format("{:.1f}", 0.5 * static_cast<double>(k))] = report.histogram.counts[k];

  return json{{"n_videos", report.per_video.size()},
              {"per_video", per_video},
              {"folds", folds},
              {"excluded", excluded},
              {"mae", report.mae},
              {"pearson", optional_number(report.pearson)},
              {"pearson_raw", optional_number(report.pearson_raw)},
              {"icc", optional_number(report.icc)},
              {"error_histogram", hist},
              {"frac_err_lt_1", report.frac_err_lt_1},
              {"within_range", range_json(report.within_range)},
              {"within_range_with_gold", range_json(report.within_range_with_gold)}};
}

json random_rounding_to_json(const RandomRoundingResult& result) {
  return json{{"repeats", result.repeats},
              {"mae", mean_se_json(result.mae)},
              {"pearson", mean_se_json(result.pearson)},
              {"icc", mean_se_json(result.icc)}};
}

namespace {

void dump_value(std::string& out, const json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      break;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        dump_value(out, value, depth + 1);
      }
      out += "\n" + close_pad + "}";
      break;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ",\n";
        out += pad;
        dump_value(out, j[i], depth + 1);
      }
      out += "\n" + close_pad + "]";
      break;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const json& j) {
  std::string out;
  dump_value(out, j, 0);
  out += '\n';
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << dump_json(j);
}

fs::path write_synthetic_dataset(const fs::path& dir, const SyntheticDataset& dataset) {
  fs::create_directories(dir / "videos");
  std::vector<ManifestEntry> entries;
  entries.reserve(dataset.exams.size());
  for (const auto& exam : dataset.exams) {
    const auto& rec = exam.record;
    ManifestEntry e;
    e.video_id = rec.video_id;
    e.patient_id = rec.patient_id;
    e.hand = rec.hand;
    e.gold_rating = rec.gold_rating;
    e.fps = rec.wrist.fps;
    e.trajectory_path = fs::path("videos") / (rec.video_id + "_keypoints.csv");
    write_trajectory_csv(dir / e.trajectory_path, rec);
    if (!exam.flow.empty()) {
      e.flow_path = fs::path("videos") / (rec.video_id + "_flow.csv");
      write_flow_csv(dir / *e.flow_path, exam.flow);
    }
    if (!exam.trajectories.empty()) {
      e.trajectories_path = fs::path("videos") / (rec.video_id + "_trajectories.csv");
      write_dense_trajectories_csv(dir / *e.trajectories_path, exam.trajectories);
    }
    entries.push_back(std::move(e));
  }
  const fs::path manifest = dir / "manifest.csv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace bars::io
