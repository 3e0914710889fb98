#include "parttransfer/pipeline.hpp"

#include "parttransfer/error.hpp"
#include "parttransfer/parallel.hpp"

namespace pt {

std::vector<ImageLocalization> localize_batch(const std::vector<AnnotatedImage>& queries,
                                              const TransferModel& model,
                                              const FeatureProvider& provider,
                                              const TransferConfig& cfg,
                                              const LocalizeOptions& options) {
  cfg.validate();
  std::vector<ImageLocalization> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const AnnotatedImage& q = queries[i];
      ImageLocalization& r = out[i];
      r.id = q.id;
      const std::optional<std::string> exclude =
          options.leave_one_out ? std::optional(q.id) : std::nullopt;
      try {
        if (options.seed_oracle_object) {
          if (!q.object_box) fail(ErrorCode::Validation, "no ground-truth object box to seed from");
          r.object = Localization{*q.object_box, {}};
          r.oracle_object = true;
        } else {
          r.object = iterative_localize(q.id, q.size, provider, model.full, model.cropped, cfg,
                                        options.raw_classifier, exclude);
        }
        if (!options.parts.empty()) {
          r.parts = localize_parts(r.object->box, q.id, q.size, provider, model.cropped,
                                   options.parts, cfg, exclude);
        }
      } catch (const std::exception& e) {
        if (options.fail_fast) throw;
        r.error = e.what();
      }
    }
  });
  return out;
}

PredictionSet to_predictions(const std::vector<ImageLocalization>& results) {
  PredictionSet out;
  for (const auto& r : results) {
    auto& p = out[r.id];
    p[kObjectPart] = r.object ? std::optional(r.object->box) : std::nullopt;
    for (const auto& [name, loc] : r.parts) p[name] = loc ? std::optional(loc->box) : std::nullopt;
  }
  return out;
}

PredictionSet predictions_at_round(const std::vector<ImageLocalization>& results, int round) {
  if (round < 1) fail(ErrorCode::InvalidArgument, "rounds are numbered from 1");
  PredictionSet out;
  for (const auto& r : results) {
    auto& p = out[r.id];
    if (!r.object) {
      p[kObjectPart] = std::nullopt;
      continue;
    }
    const auto& steps = r.object->trace.steps;
    if (steps.empty()) {
      p[kObjectPart] = r.object->box;
    } else {
      const std::size_t k = std::min(steps.size(), static_cast<std::size_t>(round)) - 1;
      p[kObjectPart] = steps[k].box;
    }
  }
  return out;
}

std::optional<FeatureVector> region_feature(const FeatureProvider& provider,
                                            const std::string& image_id, const ImageSize& size,
                                            const std::string& region,
                                            const std::optional<BoundingBox>& box) {
  if (region == "full") {
    if (!provider.region_sensitive() && !provider.has(image_id, Stage::full())) return std::nullopt;
    return provider.provide(image_id, size.frame(), Stage::full());
  }
  if (!box) return std::nullopt;
  const Stage stage = region == kObjectPart ? Stage::object() : Stage::part(region);
  if (!provider.region_sensitive() && !provider.has(image_id, stage)) return std::nullopt;
  BoundingBox clamped;
  try {
    clamped = clamp_box(*box, size);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateBox) throw;
    return std::nullopt;
  }
  return provider.provide(image_id, clamped, stage);
}

FeatureVector region_layout_feature(const FeatureProvider& provider, const std::string& image_id,
                                    const ImageSize& size, const PartPredictions& boxes,
                                    const RegionLayout& layout) {
  std::map<std::string, std::optional<FeatureVector>> features;
  for (const auto& region : layout) {
    std::optional<BoundingBox> box;
    if (auto it = boxes.find(region.name); it != boxes.end()) box = it->second;
    features[region.name] = region_feature(provider, image_id, size, region.name, box);
  }
  return concat_regions(features, layout);
}

std::vector<RegressionPair> regression_pairs(const std::vector<AnnotatedImage>& records,
                                             const PredictionSet& predictions,
                                             const FeatureProvider& provider,
                                             const std::string& field, bool class_agnostic) {
  const BoxField box_field = field == kObjectPart ? BoxField::object() : BoxField::part(field);
  std::vector<RegressionPair> pairs;
  for (const auto& r : records) {
    auto pit = predictions.find(r.id);
    if (pit == predictions.end()) continue;
    auto bit = pit->second.find(field);
    const auto truth = r.box(box_field);
    if (bit == pit->second.end() || !bit->second || !truth) continue;
    auto feature = region_feature(provider, r.id, r.size, field, bit->second);
    if (!feature) {
      fail(ErrorCode::MissingFeature, "no '" + field + "' feature for record '" + r.id + "'");
    }
    std::string label(RegressorModel::kAnyClass);
    if (!class_agnostic) {
      if (!r.class_label) fail(ErrorCode::Validation, "record '" + r.id + "' has no class");
      label = *r.class_label;
    }
    pairs.push_back({*bit->second, *truth, std::move(*feature), std::move(label)});
  }
  return pairs;
}

}  // namespace pt
