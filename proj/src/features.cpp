#include "parttransfer/features.hpp"

#include <algorithm>
#include <cmath>

#include "parttransfer/error.hpp"
#include "parttransfer/simd.hpp"

namespace pt {

Stage Stage::part(std::string name) {
  if (name.empty()) fail(ErrorCode::InvalidArgument, "part stage needs a non-empty part name");
  return Stage(Kind::PartCrop, std::move(name));
}

Stage Stage::parse(std::string_view text) {
  if (text == "full") return full();
  if (text == "object") return object();
  constexpr std::string_view prefix = "part:";
  if (text.starts_with(prefix)) return part(std::string(text.substr(prefix.size())));
  fail(ErrorCode::Parse, "unknown stage '" + std::string(text) + "'");
}

std::string Stage::name() const {
  switch (kind_) {
    case Kind::FullImage: return "full";
    case Kind::ObjectCrop: return "object";
    case Kind::PartCrop: return "part:" + part_;
  }
  return "full";
}

std::string_view to_string(Metric metric) {
  return metric == Metric::Cosine ? "cosine" : "euclidean";
}

Metric parse_metric(std::string_view text) {
  if (text == "cosine") return Metric::Cosine;
  if (text == "euclidean") return Metric::Euclidean;
  fail(ErrorCode::InvalidArgument, "unknown metric '" + std::string(text) + "'");
}

double cosine_distance(double dot, double sq_norm_a, double sq_norm_b) {
  if (!(sq_norm_a > 0.0) || !(sq_norm_b > 0.0)) {
    fail(ErrorCode::UndefinedNorm, "cosine distance of a zero-norm vector");
  }
  return std::max(0.0, 1.0 - dot / std::sqrt(sq_norm_a * sq_norm_b));
}

double distance(const FeatureVector& a, const FeatureVector& b, Metric metric) {
  if (a.dim() != b.dim()) {
    fail(ErrorCode::DimensionMismatch,
         "feature dims differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  if (metric == Metric::Euclidean) return std::sqrt(simd::squared_distance(a.view(), b.view()));
  return cosine_distance(simd::dot(a.view(), b.view()), simd::dot(a.view(), a.view()),
                         simd::dot(b.view(), b.view()));
}

void PrecomputedProvider::add(const std::string& image_id, const Stage& stage,
                              FeatureVector vector) {
  if (vector.dim() == 0) fail(ErrorCode::DimensionMismatch, "empty feature for '" + image_id + "'");
  if (dim_ == 0) dim_ = vector.dim();
  if (vector.dim() != dim_) {
    fail(ErrorCode::DimensionMismatch, "feature for '" + image_id + "' stage " + stage.name() +
                                           " has dim " + std::to_string(vector.dim()) +
                                           ", expected " + std::to_string(dim_));
  }
  for (double v : vector.values) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::Validation, "non-finite feature value for '" + image_id + "'");
    }
  }
  vectors_[image_id][stage.name()] = std::move(vector);
}

FeatureVector PrecomputedProvider::provide(const std::string& image_id, const BoundingBox&,
                                           const Stage& stage) const {
  auto it = vectors_.find(image_id);
  if (it == vectors_.end()) fail(ErrorCode::UnknownImage, "no features for image '" + image_id + "'");
  auto st = it->second.find(stage.name());
  if (st == it->second.end()) {
    fail(ErrorCode::StageUnavailable,
         "image '" + image_id + "' has no precomputed '" + stage.name() + "' feature");
  }
  return st->second;
}

bool PrecomputedProvider::has(const std::string& image_id, const Stage& stage) const {
  auto it = vectors_.find(image_id);
  return it != vectors_.end() && it->second.contains(stage.name());
}

void RasterProvider::add(const std::string& image_id, std::shared_ptr<const RasterImage> image) {
  if (!image) fail(ErrorCode::InvalidArgument, "null raster for '" + image_id + "'");
  images_[image_id] = std::move(image);
}

const RasterImage& RasterProvider::image(const std::string& image_id) const {
  auto it = images_.find(image_id);
  if (it == images_.end()) fail(ErrorCode::UnknownImage, "no raster for image '" + image_id + "'");
  return *it->second;
}

FeatureVector RasterProvider::provide(const std::string& image_id, const BoundingBox& region,
                                      const Stage&) const {
  return grid_descriptor(image(image_id), region);
}

bool RasterProvider::has(const std::string& image_id, const Stage&) const {
  return images_.contains(image_id);
}

}  // namespace pt
