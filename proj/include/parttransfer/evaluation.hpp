#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parttransfer/geometry.hpp"
#include "parttransfer/manifest.hpp"

namespace pt {

/// Part name -> predicted box; "object" names the object box.
using PartPredictions = std::map<std::string, std::optional<BoundingBox>>;
/// Image id -> its predictions.
using PredictionSet = std::map<std::string, PartPredictions>;

inline constexpr const char* kObjectPart = "object";

struct PcpOptions {
  /// Hit when iou > threshold instead of iou >= threshold.
  bool strict = false;
  /// Count absent predictions as misses instead of skipping them.
  bool absent_as_miss = false;
};

struct PartPcp {
  std::string part;
  /// Per threshold, in report threshold order.
  std::vector<std::size_t> hits;
  std::vector<double> percent;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

struct PcpReport {
  std::vector<double> thresholds;
  std::vector<PartPcp> parts;

  const PartPcp* find(const std::string& part) const;
};

/// Percentage of correctly localized parts. Every id in `predictions` is
/// looked up in `truth` (UnknownImage otherwise). For each part a sample is
/// skipped when its prediction or its ground truth is absent, so
/// evaluated + skipped equals the number of predicted images. A part with no
/// evaluated samples reports 0%. `parts` empty means every part name seen in
/// the predictions.
PcpReport pcp(const PredictionSet& predictions, const std::vector<AnnotatedImage>& truth,
              const std::vector<double>& thresholds, const std::vector<std::string>& parts = {},
              const PcpOptions& options = {});

/// Mean IoU of `part` over samples where prediction and ground truth exist.
/// EmptyInput when there are none.
double mean_iou(const PredictionSet& predictions, const std::vector<AnnotatedImage>& truth,
                const std::string& part);

/// 100 * correct / total. EmptyInput for no predictions; UnknownImage for ids
/// missing from `truth`; Validation for records without a class.
double accuracy(const std::map<std::string, std::string>& predictions,
                const std::vector<AnnotatedImage>& truth);

/// Ground-truth boxes for `parts` ("object" included) as a prediction set.
PredictionSet ground_truth_predictions(const std::vector<AnnotatedImage>& truth,
                                       const std::vector<std::string>& parts);

/// Part names annotated anywhere in `records`, sorted.
std::vector<std::string> annotated_parts(const std::vector<AnnotatedImage>& records);

struct ReportCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Sanity checks run alongside every evaluation: PCP does not increase with
/// the threshold, and ground truth scored against itself (closed hit test) is
/// 100% at every threshold.
std::vector<ReportCheck> check_report(const PcpReport& report,
                                      const std::vector<AnnotatedImage>& truth);

}  // namespace pt
