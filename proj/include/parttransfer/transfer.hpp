#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parttransfer/features.hpp"
#include "parttransfer/geometry.hpp"
#include "parttransfer/index.hpp"
#include "parttransfer/manifest.hpp"

namespace pt {

struct ClassifierModel;

struct TransferConfig {
  /// Neighbours retrieved per transfer (M).
  std::size_t neighbors = 2;
  FusionMode fusion = FusionMode::Union;
  int max_iters = 3;
  /// Consecutive boxes with IoU at or above this stop the iteration.
  double stability_iou = 0.9;
  /// Stop once the raw classifier's best one-vs-all score exceeds this.
  std::optional<double> score_threshold;
  Metric metric = Metric::Cosine;
  /// Side of the common fusion space. Fusion is resolution-invariant and
  /// always runs in the unit square; kept so configs can record it.
  double common_size = 1.0;

  void validate() const;
};

/// One candidate a transfer can copy boxes from: a frame plus its annotations
/// expressed in that frame.
struct GalleryEntry {
  std::string id;
  ImageSize frame;
  std::optional<BoundingBox> object;
  std::map<std::string, std::optional<BoundingBox>> parts;

  std::optional<BoundingBox> box(const BoxField& field) const;
};

/// Retrieval features aligned row-for-row with gallery entries.
class TransferGallery {
 public:
  TransferGallery() = default;
  TransferGallery(std::shared_ptr<const FeatureTable> features, std::vector<GalleryEntry> entries,
                  Metric metric);

  /// Whole training images with their original annotations, FullImage features.
  static TransferGallery full_images(const TrainingIndex& index);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const GalleryEntry& entry(std::size_t row) const { return entries_[row]; }
  const FeatureTable& features() const { return *features_; }
  Metric metric() const { return metric_; }
  std::optional<std::size_t> row_of(const std::string& id) const;

 private:
  std::shared_ptr<const FeatureTable> features_ = std::make_shared<FeatureTable>();
  std::vector<GalleryEntry> entries_;
  std::map<std::string, std::size_t> rows_;
  Metric metric_ = Metric::Cosine;
};

struct TransferResult {
  BoundingBox box;
  std::vector<RetrievedNeighbor> neighbors;
  /// Neighbours that carried the requested annotation.
  std::size_t fused = 0;
};

/// One round of transfer: retrieve M neighbours, map each neighbour's box
/// from its frame into the unit square, fuse, map into `frame`, clamp.
/// Neighbours without the annotation count toward M but are not fused;
/// AnnotationUnavailable when none of them has it.
TransferResult transfer_step(const FeatureVector& query, const ImageSize& frame,
                             const TransferGallery& gallery, const BoxField& field,
                             const TransferConfig& cfg,
                             const std::optional<std::string>& exclude = std::nullopt);

enum class Termination { Stability, ClassifierScore, MaxIters, StageExhausted };

std::string_view to_string(Termination reason);
Termination parse_termination(std::string_view text);

struct TraceStep {
  /// Fused box in input-image coordinates.
  BoundingBox box;
  std::vector<RetrievedNeighbor> neighbors;
};

struct TransferTrace {
  std::vector<TraceStep> steps;
  Termination reason = Termination::MaxIters;
};

struct Localization {
  BoundingBox box;
  TransferTrace trace;
};

/// Training images re-cropped for the second and later rounds. Each crop is
/// the leave-one-out predicted box grown to contain the ground-truth object.
struct CroppedTrainingSet {
  /// Adjusted crop per training record, in that record's image coordinates.
  std::vector<BoundingBox> crops;
  /// Leave-one-out predictions before adjustment.
  std::vector<BoundingBox> predicted;
  /// Entries framed by the crops; rows have object-stage features when the
  /// provider can serve them, otherwise the gallery is empty.
  TransferGallery gallery;
  /// Per-part galleries for part rounds after the first, keyed by part name.
  std::map<std::string, TransferGallery> part_galleries;

  bool has_features() const { return !gallery.empty(); }
};

CroppedTrainingSet rebuild_training_crops(const TrainingIndex& index,
                                          const FeatureProvider& provider,
                                          const TransferConfig& cfg);

/// Builds the per-part training crops later part rounds match against:
/// each record's leave-one-out part prediction inside its object crop,
/// grown to contain the ground-truth part. Needs a region-sensitive
/// provider; otherwise nothing is added.
void add_part_crops(CroppedTrainingSet& cropped, const TrainingIndex& index,
                    const FeatureProvider& provider, const std::vector<std::string>& part_names,
                    const TransferConfig& cfg);

/// Object localization by repeated transfer. Round 1 matches the whole
/// image against whole training images; later rounds match the current crop
/// against the cropped training set and compose the result back into image
/// coordinates. Stops on stability, classifier score, max_iters, or when no
/// further feature stage can be served.
Localization iterative_localize(const std::string& image_id, const ImageSize& image_size,
                                const FeatureProvider& provider, const TransferGallery& full,
                                const CroppedTrainingSet& cropped, const TransferConfig& cfg,
                                const ClassifierModel* raw_classifier = nullptr,
                                const std::optional<std::string>& exclude = std::nullopt);

using PartLocalizations = std::map<std::string, std::optional<Localization>>;

/// Part localization inside a located object. Parts no neighbour annotates
/// come back as std::nullopt.
PartLocalizations localize_parts(const BoundingBox& object_box, const std::string& image_id,
                                 const ImageSize& image_size, const FeatureProvider& provider,
                                 const CroppedTrainingSet& cropped,
                                 const std::vector<std::string>& part_names,
                                 const TransferConfig& cfg,
                                 const std::optional<std::string>& exclude = std::nullopt);

/// Everything the transfer needs from a training set, prepared once.
struct TransferModel {
  TransferGallery full;
  CroppedTrainingSet cropped;

  static TransferModel prepare(const TrainingIndex& index, const FeatureProvider& provider,
                               const TransferConfig& cfg,
                               const std::vector<std::string>& part_names = {});
};

}  // namespace pt
