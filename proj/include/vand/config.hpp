#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "vand/core.hpp"

namespace vand {

nlohmann::json config_to_json(const PipelineConfig& config);

/// Accepts a bare config object or a run-metadata document carrying a
/// "config" member. Missing fields keep their defaults; unknown fields are
/// rejected. The result is validated.
PipelineConfig config_from_json(const nlohmann::json& doc);

PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace vand
