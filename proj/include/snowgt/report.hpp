#pragma once

#include "snowgt/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace snowgt {

// Report schema: {per_image: [...], mean: {...}, weights: {...}}. Infinite
// PSNR is written as the string "inf"; metrics that need the degraded input
// are null when it was not supplied.
nlohmann::json to_json(const ImageMetrics& metrics);
nlohmann::json to_json(const LossWeights& weights);
nlohmann::json to_json(const MetricsReport& report);

void write_json(const std::filesystem::path& file, const nlohmann::json& doc);

// Pairs files of pred_dir and gt_dir by file name (and degraded_dir when
// given); per-image names are the file stems.
MetricsReport evaluate_directories(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                   const std::optional<std::filesystem::path>& degraded_dir,
                                   const LossWeights& weights);

} // namespace snowgt
