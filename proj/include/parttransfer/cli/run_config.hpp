#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "parttransfer/regression.hpp"
#include "parttransfer/report.hpp"
#include "parttransfer/transfer.hpp"

namespace pt::cli {

struct RunPaths {
  std::string train;
  std::string test;
  std::string regressor;
  std::string classifier;
  std::string raw_classifier;
  std::string localizations;
  std::string oracle_localizations;
  std::string predictions;
  std::string output_dir = "out";
};

struct RegressionSettings {
  double lambda = 1.0;
  TargetConvention convention = TargetConvention::SizeNormalized;
  /// Fit and apply part regressors as well as the object regressor.
  bool apply_to_parts = false;
  /// Append a constant 1 to regression features.
  bool bias_feature = false;
  /// One model for all classes instead of one per class.
  bool class_agnostic = false;
  /// Keep the input box when the regressor has no model for the class.
  bool fallback = false;
};

struct SvmSettings {
  double c = 1.0;
  int epochs = 50;
  std::vector<std::string> regions{"full", "object", "head", "body"};
};

struct EvaluationSettings {
  std::vector<double> thresholds{0.5, 0.4, 0.3};
  bool strict = false;
  bool absent_as_miss = false;
};

struct RunConfig {
  RunPaths paths;
  TransferConfig transfer;
  /// Parts to localize; empty means every part annotated in training.
  std::vector<std::string> parts;
  RegressionSettings regression;
  SvmSettings svm;
  EvaluationSettings evaluation;
  /// 0 keeps the hardware default.
  unsigned threads = 0;
  std::uint64_t seed = 0;
  ReportFormat format = ReportFormat::Text;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Config error on unknown keys or ill-typed values. Missing keys keep
/// their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
/// Reads a JSON config file and overlays it onto the defaults.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Config error naming the field when a required path is empty or missing
/// on disk.
void require_file(const std::string& path, const std::string& field);

}  // namespace pt::cli
