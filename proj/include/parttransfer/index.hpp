#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parttransfer/features.hpp"
#include "parttransfer/manifest.hpp"

namespace pt {

struct Neighbor {
  std::size_t row = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Row-major matrix of equal-dimension features with cached squared norms.
class FeatureTable {
 public:
  explicit FeatureTable(std::size_t dim = 0) : dim_(dim) {}

  void append(const FeatureVector& v);

  std::size_t rows() const { return sq_norms_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  double sq_norm(std::size_t i) const { return sq_norms_[i]; }

  /// Distance from `query` to every row, in row order.
  std::vector<double> distances(const FeatureVector& query, Metric metric) const;

  /// Exact top-`m` rows by ascending distance. Ties go to the lower row,
  /// i.e. the earlier manifest record. `exclude` never appears.
  std::vector<Neighbor> knn(const FeatureVector& query, std::size_t m, Metric metric,
                            std::optional<std::size_t> exclude = std::nullopt) const;

 private:
  std::size_t dim_;
  std::vector<double> data_;
  std::vector<double> sq_norms_;
};

/// Validated training records plus one feature table per available stage.
/// Immutable after build.
class TrainingIndex {
 public:
  /// Validates `records`, then loads the FullImage feature of every record
  /// (region = whole image) and any other stage every record provides.
  static TrainingIndex build(std::vector<AnnotatedImage> records, const FeatureProvider& provider,
                             Metric metric = Metric::Cosine);

  const std::vector<AnnotatedImage>& records() const { return records_; }
  const AnnotatedImage& record(std::size_t row) const { return records_[row]; }
  std::size_t size() const { return records_.size(); }
  Metric metric() const { return metric_; }

  std::optional<std::size_t> row_of(const std::string& id) const;
  bool has_stage(const Stage& stage) const { return tables_.contains(stage.name()); }
  std::vector<std::string> stages() const;
  /// StageUnavailable when the stage is not indexed.
  std::shared_ptr<const FeatureTable> table(const Stage& stage) const;

 private:
  std::vector<AnnotatedImage> records_;
  std::map<std::string, std::size_t> rows_;
  std::map<std::string, std::shared_ptr<const FeatureTable>> tables_;
  Metric metric_ = Metric::Cosine;
};

struct RetrievedNeighbor {
  std::string id;
  double distance = 0.0;
};

/// k-nearest training records for `query` at `stage`, ascending distance,
/// min(m, available) results, optional leave-one-out exclusion by id.
std::vector<RetrievedNeighbor> knn(const TrainingIndex& index, const FeatureVector& query,
                                   const Stage& stage, std::size_t m,
                                   const std::optional<std::string>& exclude = std::nullopt);

/// Builds a provider for the records' stored features: raster assets when
/// every record names an image, otherwise FVEC rows / inline vectors.
/// Missing files or rows raise MissingFeature naming the path.
std::unique_ptr<FeatureProvider> load_provider(const std::vector<AnnotatedImage>& records);
std::unique_ptr<FeatureProvider> load_provider(const std::vector<AnnotatedImage>& train,
                                               const std::vector<AnnotatedImage>& test);

}  // namespace pt
