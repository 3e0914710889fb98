#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "parttransfer/features.hpp"
#include "parttransfer/geometry.hpp"
#include "parttransfer/manifest.hpp"
#include "parttransfer/raster.hpp"

namespace pt {

/// A part's placement inside its object, in object-relative unit coordinates
/// ((0, 0, 1, 1) is the whole object box).
struct PartPlacement {
  std::string name;
  BoundingBox relative;
};

std::vector<PartPlacement> default_part_placements();

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_train = 500;
  std::size_t n_test = 200;
  /// Appearance groups; each has its own typical object placement.
  std::size_t n_clusters = 8;
  std::size_t n_classes = 4;
  /// Raster worlds emit images; vector worlds emit stored features.
  bool raster = false;
  /// Nominal image size; each axis is scaled by a factor drawn from
  /// [1 - size_variation, 1 + size_variation] and rounded to whole pixels.
  ImageSize image_size{128.0, 128.0};
  double size_variation = 0.2;
  /// Relative geometric noise of objects and parts within a cluster.
  double box_jitter = 0.05;
  /// Standard deviation of feature noise (vector) or pixel noise (raster).
  double feature_noise = 0.1;
  /// Range of a cluster's object width and height, relative to the image.
  double object_scale_min = 0.35;
  double object_scale_max = 0.65;
  /// Striped distractor patches drawn behind the object (raster only).
  std::size_t clutter = 3;
  std::vector<PartPlacement> parts = default_part_placements();

  /// Config error for non-finite or negative noise, empty counts, or a part
  /// placed outside its object.
  void validate() const;
};

struct SynthSplit {
  std::vector<AnnotatedImage> records;
  /// Cluster of each record, aligned with `records`.
  std::vector<std::size_t> clusters;
  /// Raster worlds: image per record id.
  std::map<std::string, std::shared_ptr<const RasterImage>> images;
  /// Vector worlds: stage name -> vectors aligned with `records`.
  std::map<std::string, std::vector<FeatureVector>> features;
};

struct SynthWorld {
  SynthConfig config;
  SynthSplit train;
  SynthSplit test;
};

/// Draws a world. Each sample picks a cluster, jitters the cluster's object
/// box and the part placements, and gets a class. Vector worlds store
/// "full" and "object" features [cluster one-hot | relative box] plus
/// Gaussian noise, with class = cluster mod n_classes. Raster worlds draw a
/// bright object striped at a class-dependent angle over a background with
/// striped clutter, the first part as a darker rectangle, plus pixel noise;
/// the class is drawn independently of the cluster. Same config, same world.
SynthWorld generate(const SynthConfig& config);

/// Provider serving the world's features for both splits.
std::unique_ptr<FeatureProvider> make_provider(const SynthWorld& world);

/// Writes train.jsonl and test.jsonl plus PGM images (raster) or FVEC files
/// per split and stage (vector) under `dir`. Manifests reference assets by
/// relative path.
void write_world(const SynthWorld& world, const std::filesystem::path& dir);

/// Baseline ignoring the query: the mean relative object box of the
/// training records, scaled to `size`.
BoundingBox center_prior(const std::vector<AnnotatedImage>& train, const ImageSize& size);

}  // namespace pt
