#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parttransfer/geometry.hpp"
#include "parttransfer/raster.hpp"

namespace pt {

struct FeatureVector {
  std::vector<double> values;

  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  std::span<const double> view() const { return values; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Pipeline level a feature describes. Serialized as "full", "object" or
/// "part:<name>".
class Stage {
 public:
  enum class Kind { FullImage, ObjectCrop, PartCrop };

  static Stage full() { return Stage(Kind::FullImage, {}); }
  static Stage object() { return Stage(Kind::ObjectCrop, {}); }
  static Stage part(std::string name);
  static Stage parse(std::string_view text);

  Kind kind() const { return kind_; }
  const std::string& part_name() const { return part_; }
  std::string name() const;

  friend auto operator<=>(const Stage&, const Stage&) = default;

 private:
  Stage(Kind kind, std::string part) : kind_(kind), part_(std::move(part)) {}

  Kind kind_;
  std::string part_;
};

enum class Metric { Cosine, Euclidean };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

/// Cosine: 1 - a.b / (|a||b|), UndefinedNorm for a zero vector.
/// Euclidean: |a - b|.
double distance(const FeatureVector& a, const FeatureVector& b, Metric metric);

/// Cosine distance from a dot product and the two squared norms. Shared by
/// distance() and the retrieval scan so both produce identical values.
double cosine_distance(double dot, double sq_norm_a, double sq_norm_b);

inline constexpr int kDescriptorCells = 4;
inline constexpr int kDescriptorBins = 8;
inline constexpr int kDescriptorResample = 64;
inline constexpr std::size_t kDescriptorDim = kDescriptorCells * kDescriptorCells * kDescriptorBins;

/// Gradient-orientation grid descriptor of `region` (clamped to the image).
///
/// The crop is bilinearly resampled to 64x64 with half-pixel-centre
/// alignment. Central-difference gradients (replicated borders) vote with
/// their magnitude into one of 8 orientation bins over [0, 2pi), pooled over a
/// 4x4 grid of 16x16 cells and laid out as [(cell_y * 4 + cell_x) * 8 + bin].
/// The result is L2-normalized; a crop without any gradient yields the
/// uniform vector 1/sqrt(128).
FeatureVector grid_descriptor(const RasterImage& image, const BoundingBox& region);

/// Supplies features for (image, region, stage). Implementations are
/// immutable after construction and safe for concurrent readers.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;

  virtual FeatureVector provide(const std::string& image_id, const BoundingBox& region,
                                const Stage& stage) const = 0;
  virtual std::size_t dim() const = 0;
  /// True when features are recomputed for arbitrary regions. Stored
  /// per-stage features ignore the region, which bounds how many refinement
  /// rounds can use fresh features.
  virtual bool region_sensitive() const = 0;
  virtual bool has(const std::string& image_id, const Stage& stage) const = 0;
};

/// Serves stored vectors keyed by (image id, stage); the region is ignored.
class PrecomputedProvider final : public FeatureProvider {
 public:
  void add(const std::string& image_id, const Stage& stage, FeatureVector vector);

  FeatureVector provide(const std::string& image_id, const BoundingBox& region,
                        const Stage& stage) const override;
  std::size_t dim() const override { return dim_; }
  bool region_sensitive() const override { return false; }
  bool has(const std::string& image_id, const Stage& stage) const override;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, std::map<std::string, FeatureVector>> vectors_;
};

/// Computes grid_descriptor on in-memory rasters; the stage is ignored.
class RasterProvider final : public FeatureProvider {
 public:
  void add(const std::string& image_id, std::shared_ptr<const RasterImage> image);

  FeatureVector provide(const std::string& image_id, const BoundingBox& region,
                        const Stage& stage) const override;
  std::size_t dim() const override { return kDescriptorDim; }
  bool region_sensitive() const override { return true; }
  bool has(const std::string& image_id, const Stage& stage) const override;

  const RasterImage& image(const std::string& image_id) const;

 private:
  std::map<std::string, std::shared_ptr<const RasterImage>> images_;
};

}  // namespace pt
