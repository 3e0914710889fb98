#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "parttransfer/pipeline.hpp"

namespace pt::cli {

// Localization records, one JSON object per line:
//   {"id": "a", "object": [x, y, w, h], "oracle_object": false,
//    "termination": "Stability", "iterations": 2,
//    "trace": [{"box": [...], "neighbors": [["train_1", 0.03], ...]}, ...],
//    "parts": {"head": {"box": [...], "termination": "MaxIters", "iterations": 3,
//                       "trace": [...]}, "body": null}}
// Failed images carry "object": null and an "error" string.
nlohmann::json localization_json(const ImageLocalization& loc);
ImageLocalization localization_from_json(const nlohmann::json& j);

void write_localizations(const std::filesystem::path& path,
                         const std::vector<ImageLocalization>& results);
std::vector<ImageLocalization> read_localizations(const std::filesystem::path& path);

struct ClassPrediction {
  std::string id;
  std::string label;
  /// Highest scores first.
  std::vector<std::pair<std::string, double>> top;
};

// {"id": "a", "class": "c01", "scores": [["c01", 1.2], ["c03", -0.4], ...]}
void write_class_predictions(const std::filesystem::path& path,
                             const std::vector<ClassPrediction>& predictions);
std::map<std::string, std::string> read_class_predictions(const std::filesystem::path& path);

/// Writes one JSON value per line.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& lines);
/// Parse errors name the file and line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace pt::cli
