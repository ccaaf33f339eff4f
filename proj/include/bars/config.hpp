#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "bars/model.hpp"
#include "bars/pipeline.hpp"

namespace bars {

/// Environment variable naming a config file; an explicit --config wins.
inline constexpr const char* kConfigEnvVar = "BARS_CONFIG";

struct RunConfig {
  PipelineConfig pipeline;
  ModelConfig model;
  std::size_t repeats = 100;  // random-rounding repeats
};

/// Sets one key. Unknown keys and malformed values throw Schema.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` lines; '#' starts a comment. Errors carry path:line.
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

/// Every key with its current value, in the file syntax.
std::string format_config(const RunConfig& config);

nlohmann::json config_to_json(const RunConfig& config);

}  // namespace bars
