#include "parttransfer/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "parttransfer/error.hpp"
#include "parttransfer/parallel.hpp"
#include "parttransfer/recognition.hpp"

namespace pt {

void TransferConfig::validate() const {
  if (neighbors == 0) fail(ErrorCode::Config, "M (neighbors) must be >= 1");
  if (max_iters < 1) fail(ErrorCode::Config, "max_iters must be >= 1");
  if (!(stability_iou > 0.0 && stability_iou <= 1.0)) {
    fail(ErrorCode::Config, "stability_iou must lie in (0, 1]");
  }
  if (score_threshold && !std::isfinite(*score_threshold)) {
    fail(ErrorCode::Config, "score_threshold must be finite");
  }
  if (!(common_size > 0.0)) fail(ErrorCode::Config, "common_size must be positive");
}

std::optional<BoundingBox> GalleryEntry::box(const BoxField& field) const {
  if (field.is_object()) return object;
  auto it = parts.find(field.part_name());
  return it == parts.end() ? std::nullopt : it->second;
}

TransferGallery::TransferGallery(std::shared_ptr<const FeatureTable> features,
                                 std::vector<GalleryEntry> entries, Metric metric)
    : features_(std::move(features)), entries_(std::move(entries)), metric_(metric) {
  if (features_->rows() != entries_.size()) {
    fail(ErrorCode::DimensionMismatch, "gallery features and entries differ in length");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) rows_[entries_[i].id] = i;
}

TransferGallery TransferGallery::full_images(const TrainingIndex& index) {
  std::vector<GalleryEntry> entries;
  entries.reserve(index.size());
  for (const auto& r : index.records()) entries.push_back({r.id, r.size, r.object_box, r.parts});
  return TransferGallery(index.table(Stage::full()), std::move(entries), index.metric());
}

std::optional<std::size_t> TransferGallery::row_of(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

TransferResult transfer_step(const FeatureVector& query, const ImageSize& frame,
                             const TransferGallery& gallery, const BoxField& field,
                             const TransferConfig& cfg, const std::optional<std::string>& exclude) {
  if (gallery.empty()) fail(ErrorCode::EmptyIndex, "transfer from an empty gallery");
  if (!frame.valid()) fail(ErrorCode::InvalidSize, "transfer into an invalid frame");

  std::optional<std::size_t> excluded;
  if (exclude) excluded = gallery.row_of(*exclude);
  const auto hits = gallery.features().knn(query, cfg.neighbors, gallery.metric(), excluded);

  TransferResult result;
  std::vector<BoundingBox> unit_boxes;
  for (const Neighbor& n : hits) {
    const GalleryEntry& e = gallery.entry(n.row);
    result.neighbors.push_back({e.id, n.distance});
    if (auto b = e.box(field)) unit_boxes.push_back(map_box(*b, e.frame, kUnitFrame));
  }
  if (unit_boxes.empty()) {
    fail(ErrorCode::AnnotationUnavailable,
         "none of the " + std::to_string(hits.size()) + " neighbours annotates '" + field.name() + "'");
  }
  result.fused = unit_boxes.size();
  result.box = clamp_box(map_box(fuse_boxes(unit_boxes, cfg.fusion), kUnitFrame, frame), frame);
  return result;
}

std::string_view to_string(Termination reason) {
  switch (reason) {
    case Termination::Stability: return "Stability";
    case Termination::ClassifierScore: return "ClassifierScore";
    case Termination::MaxIters: return "MaxIters";
    case Termination::StageExhausted: return "StageExhausted";
  }
  return "MaxIters";
}

Termination parse_termination(std::string_view text) {
  for (auto r : {Termination::Stability, Termination::ClassifierScore, Termination::MaxIters,
                 Termination::StageExhausted}) {
    if (to_string(r) == text) return r;
  }
  fail(ErrorCode::Parse, "unknown termination reason '" + std::string(text) + "'");
}

namespace {

// Parts of `parts` re-expressed relative to `crop`.
std::map<std::string, std::optional<BoundingBox>> parts_relative_to(
    const std::map<std::string, std::optional<BoundingBox>>& parts, const BoundingBox& crop) {
  std::map<std::string, std::optional<BoundingBox>> out;
  for (const auto& [name, box] : parts) {
    out[name] = box ? std::optional(relative_to(*box, crop)) : std::nullopt;
  }
  return out;
}

bool is_exhaustion(const Error& e) {
  return e.code() == ErrorCode::StageUnavailable || e.code() == ErrorCode::AnnotationUnavailable ||
         e.code() == ErrorCode::NoOverlap || e.code() == ErrorCode::DegenerateBox ||
         e.code() == ErrorCode::EmptyIndex;
}

}  // namespace

CroppedTrainingSet rebuild_training_crops(const TrainingIndex& index,
                                          const FeatureProvider& provider,
                                          const TransferConfig& cfg) {
  cfg.validate();
  if (index.size() < cfg.neighbors + 1) {
    fail(ErrorCode::InvalidArgument, "rebuilding crops needs at least M+1 training records (have " +
                                         std::to_string(index.size()) + ", M = " +
                                         std::to_string(cfg.neighbors) + ")");
  }
  for (const auto& r : index.records()) {
    if (!r.object_box) fail(ErrorCode::Validation, "training record '" + r.id + "' has no object_box");
  }

  const TransferGallery full = TransferGallery::full_images(index);
  const auto full_table = index.table(Stage::full());
  const bool recompute = provider.region_sensitive();
  const bool stored_object = !recompute && index.has_stage(Stage::object());

  const std::size_t n = index.size();
  CroppedTrainingSet out;
  out.crops.resize(n);
  out.predicted.resize(n);
  std::vector<FeatureVector> features(recompute || stored_object ? n : 0);

  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const AnnotatedImage& r = index.record(i);
      const auto row = full_table->row(i);
      const FeatureVector query(std::vector<double>(row.begin(), row.end()));
      const TransferResult pred =
          transfer_step(query, r.size, full, BoxField::object(), cfg, r.id);
      out.predicted[i] = pred.box;
      out.crops[i] = clamp_box(hull(pred.box, *r.object_box), r.size);
      if (recompute) {
        features[i] = provider.provide(r.id, out.crops[i], Stage::object());
      } else if (stored_object) {
        const auto obj = index.table(Stage::object())->row(i);
        features[i] = FeatureVector(std::vector<double>(obj.begin(), obj.end()));
      }
    }
  });

  if (features.empty()) return out;
  std::vector<GalleryEntry> entries;
  entries.reserve(n);
  auto table = std::make_shared<FeatureTable>(features.front().dim());
  for (std::size_t i = 0; i < n; ++i) {
    const AnnotatedImage& r = index.record(i);
    const BoundingBox& crop = out.crops[i];
    entries.push_back({r.id, frame_of(crop), relative_to(*r.object_box, crop),
                       parts_relative_to(r.parts, crop)});
    table->append(features[i]);
  }
  out.gallery = TransferGallery(std::move(table), std::move(entries), index.metric());
  return out;
}

void add_part_crops(CroppedTrainingSet& cropped, const TrainingIndex& index,
                    const FeatureProvider& provider, const std::vector<std::string>& part_names,
                    const TransferConfig& cfg) {
  if (!provider.region_sensitive() || !cropped.has_features() || cfg.max_iters < 2) return;
  const TransferGallery& objects = cropped.gallery;
  for (const std::string& part : part_names) {
    const BoxField field = BoxField::part(part);
    const std::size_t n = objects.size();
    std::vector<std::optional<GalleryEntry>> entries(n);
    std::vector<FeatureVector> features(n);

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const GalleryEntry& e = objects.entry(i);
        const auto rel_gt = e.box(field);
        if (!rel_gt) continue;
        const BoundingBox& crop = cropped.crops[i];
        const AnnotatedImage& r = index.record(i);
        const BoundingBox gt = compose(*rel_gt, crop);
        BoundingBox part_crop = gt;
        const auto row = objects.features().row(i);
        try {
          const TransferResult pred =
              transfer_step(FeatureVector(std::vector<double>(row.begin(), row.end())), e.frame,
                            objects, field, cfg, e.id);
          part_crop = hull(compose(pred.box, crop), gt);
        } catch (const Error& err) {
          if (err.code() != ErrorCode::AnnotationUnavailable && err.code() != ErrorCode::NoOverlap) {
            throw;
          }
        }
        part_crop = clamp_box(part_crop, r.size);
        features[i] = provider.provide(r.id, part_crop, Stage::part(part));
        entries[i] = GalleryEntry{e.id, frame_of(part_crop), std::nullopt,
                                  {{part, relative_to(gt, part_crop)}}};
      }
    });

    std::vector<GalleryEntry> kept;
    auto table = std::make_shared<FeatureTable>(provider.dim());
    for (std::size_t i = 0; i < n; ++i) {
      if (!entries[i]) continue;
      kept.push_back(std::move(*entries[i]));
      table->append(features[i]);
    }
    if (!kept.empty()) {
      cropped.part_galleries[part] = TransferGallery(std::move(table), std::move(kept), objects.metric());
    }
  }
}

Localization iterative_localize(const std::string& image_id, const ImageSize& image_size,
                                const FeatureProvider& provider, const TransferGallery& full,
                                const CroppedTrainingSet& cropped, const TransferConfig& cfg,
                                const ClassifierModel* raw_classifier,
                                const std::optional<std::string>& exclude) {
  cfg.validate();
  Localization loc;
  auto& steps = loc.trace.steps;

  {
    const FeatureVector query = provider.provide(image_id, image_size.frame(), Stage::full());
    TransferResult first = transfer_step(query, image_size, full, BoxField::object(), cfg, exclude);
    steps.push_back({first.box, std::move(first.neighbors)});
  }

  for (;;) {
    const int t = static_cast<int>(steps.size());
    const BoundingBox& current = steps.back().box;

    if (t >= 2 && iou(current, steps[steps.size() - 2].box) >= cfg.stability_iou) {
      loc.trace.reason = Termination::Stability;
      break;
    }
    if (raw_classifier != nullptr && cfg.score_threshold) {
      std::optional<FeatureVector> crop_feature;
      try {
        crop_feature = provider.provide(image_id, current, Stage::object());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::StageUnavailable) throw;
      }
      if (crop_feature) {
        const Prediction p = predict(*raw_classifier, *crop_feature);
        if (p.scores[p.index] > *cfg.score_threshold) {
          loc.trace.reason = Termination::ClassifierScore;
          break;
        }
      }
    }
    if (t >= cfg.max_iters) {
      loc.trace.reason = Termination::MaxIters;
      break;
    }
    // Stored features describe one fixed crop, so they support one extra round.
    if (!cropped.has_features() || (!provider.region_sensitive() && t >= 2)) {
      loc.trace.reason = Termination::StageExhausted;
      break;
    }
    try {
      const FeatureVector query = provider.provide(image_id, current, Stage::object());
      TransferResult next =
          transfer_step(query, frame_of(current), cropped.gallery, BoxField::object(), cfg, exclude);
      const BoundingBox box = clamp_box(compose(next.box, current), image_size);
      steps.push_back({box, std::move(next.neighbors)});
    } catch (const Error& e) {
      if (!is_exhaustion(e)) throw;
      loc.trace.reason = Termination::StageExhausted;
      break;
    }
  }
  loc.box = steps.back().box;
  return loc;
}

PartLocalizations localize_parts(const BoundingBox& object_box, const std::string& image_id,
                                 const ImageSize& image_size, const FeatureProvider& provider,
                                 const CroppedTrainingSet& cropped,
                                 const std::vector<std::string>& part_names,
                                 const TransferConfig& cfg,
                                 const std::optional<std::string>& exclude) {
  cfg.validate();
  if (!cropped.has_features()) {
    fail(ErrorCode::EmptyIndex, "part localization needs a cropped training set with features");
  }
  const BoundingBox crop = clamp_box(object_box, image_size);
  const FeatureVector object_query = provider.provide(image_id, crop, Stage::object());

  PartLocalizations out;
  for (const std::string& part : part_names) {
    const BoxField field = BoxField::part(part);
    Localization loc;
    auto& steps = loc.trace.steps;
    try {
      TransferResult first =
          transfer_step(object_query, frame_of(crop), cropped.gallery, field, cfg, exclude);
      steps.push_back({compose(first.box, crop), std::move(first.neighbors)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AnnotationUnavailable && e.code() != ErrorCode::NoOverlap) throw;
      out[part] = std::nullopt;
      continue;
    }

    auto gallery_it = cropped.part_galleries.find(part);
    for (;;) {
      const int t = static_cast<int>(steps.size());
      const BoundingBox& current = steps.back().box;
      if (t >= 2 && iou(current, steps[steps.size() - 2].box) >= cfg.stability_iou) {
        loc.trace.reason = Termination::Stability;
        break;
      }
      if (t >= cfg.max_iters) {
        loc.trace.reason = Termination::MaxIters;
        break;
      }
      if (!provider.region_sensitive() || gallery_it == cropped.part_galleries.end()) {
        loc.trace.reason = Termination::StageExhausted;
        break;
      }
      try {
        const FeatureVector query = provider.provide(image_id, current, Stage::part(part));
        TransferResult next =
            transfer_step(query, frame_of(current), gallery_it->second, field, cfg, exclude);
        steps.push_back({compose(next.box, current), std::move(next.neighbors)});
      } catch (const Error& e) {
        if (!is_exhaustion(e)) throw;
        loc.trace.reason = Termination::StageExhausted;
        break;
      }
    }
    loc.box = steps.back().box;
    out[part] = std::move(loc);
  }
  return out;
}

TransferModel TransferModel::prepare(const TrainingIndex& index, const FeatureProvider& provider,
                                     const TransferConfig& cfg,
                                     const std::vector<std::string>& part_names) {
  TransferModel model;
  model.full = TransferGallery::full_images(index);
  model.cropped = rebuild_training_crops(index, provider, cfg);
  add_part_crops(model.cropped, index, provider, part_names, cfg);
  return model;
}

}  // namespace pt
