#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parttransfer/evaluation.hpp"
#include "parttransfer/recognition.hpp"
#include "parttransfer/regression.hpp"
#include "parttransfer/transfer.hpp"

namespace pt {

struct LocalizeOptions {
  /// Also localize these parts inside the located object.
  std::vector<std::string> parts;
  /// Start from the ground-truth object box instead of localizing it.
  bool seed_oracle_object = false;
  /// Queries are training records; each excludes itself from retrieval.
  bool leave_one_out = false;
  /// Rethrow the first per-image failure instead of recording it.
  bool fail_fast = false;
  const ClassifierModel* raw_classifier = nullptr;
};

struct ImageLocalization {
  std::string id;
  /// Absent when localization failed; the trace is empty for oracle seeds.
  std::optional<Localization> object;
  bool oracle_object = false;
  PartLocalizations parts;
  /// Failure message, empty on success.
  std::string error;
};

/// Localizes every query, in parallel, returning results in query order.
std::vector<ImageLocalization> localize_batch(const std::vector<AnnotatedImage>& queries,
                                              const TransferModel& model,
                                              const FeatureProvider& provider,
                                              const TransferConfig& cfg,
                                              const LocalizeOptions& options);

/// Final boxes per image as a prediction set ("object" plus part names).
PredictionSet to_predictions(const std::vector<ImageLocalization>& results);

/// Object boxes after round `round` (1-based) of each trace, or the final
/// box when the trace stopped earlier.
PredictionSet predictions_at_round(const std::vector<ImageLocalization>& results, int round);

/// Feature for a named region of an image: "full" uses the whole frame,
/// "object" the object box, anything else the part crop of that name.
/// std::nullopt when the box is absent or the provider cannot serve it.
std::optional<FeatureVector> region_feature(const FeatureProvider& provider,
                                            const std::string& image_id, const ImageSize& size,
                                            const std::string& region,
                                            const std::optional<BoundingBox>& box);

/// Concatenated region features in `layout` order for one image, given the
/// box of each region ("full" needs none). Absent regions are zero blocks.
FeatureVector region_layout_feature(const FeatureProvider& provider, const std::string& image_id,
                                    const ImageSize& size, const PartPredictions& boxes,
                                    const RegionLayout& layout);

/// Regression pairs (predicted box, ground truth, feature on the predicted
/// box) for `field` over the records that have a prediction and a ground
/// truth. `class_agnostic` stores every pair under the "*" class.
std::vector<RegressionPair> regression_pairs(const std::vector<AnnotatedImage>& records,
                                             const PredictionSet& predictions,
                                             const FeatureProvider& provider,
                                             const std::string& field, bool class_agnostic);

}  // namespace pt
