#include "bars/dataset.hpp"

#include <fstream>
#include <optional>

#include <omp.h>

#include "bars/error.hpp"

namespace bars {

namespace {

struct Outcome {
  std::optional<FeatureRow> row;
  std::optional<ProcessedVideo> processed;
  std::optional<ProcessingError> error;
};

FeatureRow to_row(const VideoRecord& rec, const ProcessedVideo& processed) {
  return {rec.video_id, rec.patient_id, rec.hand, rec.gold_rating, processed.features.to_array()};
}

Outcome run_one(const VideoInputs& video, const PipelineConfig& config) {
  const auto& id = video.record.video_id;
  try {
    auto processed = process_video(video, config);
    auto row = to_row(video.record, processed);
    return {std::move(row), std::move(processed), std::nullopt};
  } catch (const StageError& e) {
    return {std::nullopt, std::nullopt, ProcessingError{id, e.stage(), e.reason(), e.what()}};
  } catch (const std::exception& e) {
    return {std::nullopt, std::nullopt, ProcessingError{id, "process", "Internal", e.what()}};
  }
}

Outcome load_and_run(const io::ManifestEntry& entry, const PipelineConfig& config) {
  VideoInputs video;
  try {
    video = io::load_video(entry);
  } catch (const Error& e) {
    return {std::nullopt, std::nullopt, ProcessingError{entry.video_id, "load", std::string(to_string(e.code())), e.what()}};
  } catch (const std::exception& e) {
    return {std::nullopt, std::nullopt, ProcessingError{entry.video_id, "load", "Io", e.what()}};
  }
  return run_one(video, config);
}

template <typename F>
DatasetFeatures collect(std::size_t n, int jobs, F&& body) {
  std::vector<Outcome> outcomes(n);
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < count; ++i) outcomes[static_cast<std::size_t>(i)] = body(static_cast<std::size_t>(i));

  DatasetFeatures out;
  for (auto& o : outcomes) {
    if (o.row) out.rows.push_back(std::move(*o.row));
    if (o.processed) out.processed.push_back(std::move(*o.processed));
    if (o.error) out.errors.push_back(std::move(*o.error));
  }
  return out;
}

std::string csv_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

DatasetFeatures process_dataset(std::span<const VideoInputs> videos, const PipelineConfig& config, int jobs) {
  return collect(videos.size(), jobs, [&](std::size_t i) { return run_one(videos[i], config); });
}

DatasetFeatures process_manifest(std::span<const io::ManifestEntry> entries, const PipelineConfig& config,
                                 int jobs) {
  return collect(entries.size(), jobs, [&](std::size_t i) { return load_and_run(entries[i], config); });
}

void write_errors_csv(const std::filesystem::path& path, std::span<const ProcessingError> errors) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "video_id,stage,reason,detail\n";
  for (const auto& e : errors)
    out << csv_field(e.video_id) << ',' << e.stage << ',' << e.reason << ',' << csv_field(e.detail) << '\n';
}

}  // namespace bars
