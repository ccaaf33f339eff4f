#pragma once

#include <span>
#include <string>
#include <vector>

#include "bars/eval.hpp"
#include "bars/io.hpp"
#include "bars/pipeline.hpp"

namespace bars {

/// One video that did not make it to a feature row.
struct ProcessingError {
  std::string video_id;
  std::string stage;
  std::string reason;
  std::string detail;
};

struct DatasetFeatures {
  std::vector<FeatureRow> rows;  // input order, failed videos skipped
  std::vector<ProcessedVideo> processed;  // parallel to rows
  std::vector<ProcessingError> errors;
};

/// Runs process_video on each input; `jobs` <= 0 uses the OpenMP default.
/// Output order follows input order whatever the scheduling.
DatasetFeatures process_dataset(std::span<const VideoInputs> videos, const PipelineConfig& config, int jobs = 0);

/// Same, loading each manifest entry first; unreadable or malformed video
/// files become "load" errors for that video only.
DatasetFeatures process_manifest(std::span<const io::ManifestEntry> entries, const PipelineConfig& config,
                                 int jobs = 0);

void write_errors_csv(const std::filesystem::path& path, std::span<const ProcessingError> errors);

}  // namespace bars
