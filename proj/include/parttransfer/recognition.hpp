#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parttransfer/features.hpp"

namespace pt {

struct RegionSpec {
  std::string name;
  std::size_t dim = 0;

  friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

using RegionLayout = std::vector<RegionSpec>;

/// [entire image, object, head, body], each of dimension `dim`.
RegionLayout default_layout(std::size_t dim);

std::size_t layout_dim(const RegionLayout& layout);

/// Concatenates region features in layout order; absent regions become
/// zero blocks. DimensionMismatch when a present feature has the wrong size.
FeatureVector concat_regions(const std::map<std::string, std::optional<FeatureVector>>& features,
                             const RegionLayout& layout);

/// One-vs-all linear classifiers over a fixed region layout.
struct ClassifierModel {
  /// Sorted ascending; ties in predict() resolve to the earlier class.
  std::vector<std::string> classes;
  std::vector<std::vector<double>> weights;
  std::vector<double> biases;
  RegionLayout layout;
  double c = 1.0;

  std::size_t dim() const { return weights.empty() ? 0 : weights.front().size(); }
};

struct SvmOptions {
  double c = 1.0;
  int epochs = 50;
  std::uint64_t seed = 0;
};

struct LabeledFeature {
  FeatureVector feature;
  std::string label;
};

struct SvmTrainingLog {
  /// objective[class][epoch] after each epoch of the raw iterate.
  std::vector<std::vector<double>> objective;
  /// Objective of the model training would return if it stopped after each
  /// epoch (the best iterate so far).
  std::vector<std::vector<double>> kept_objective;
  /// Epoch whose iterate was kept, per class.
  std::vector<int> kept_epoch;
};

/// Trains one hinge-loss linear SVM per class (class vs rest), minimizing
///   (1 / 2C) (|w|^2 + b^2) + sum_i max(0, 1 - y_i (w.x_i + b))
/// by epoch-wise stochastic subgradient descent with step 1 / (lambda t),
/// lambda = 1 / (C n), over a seeded shuffle. The bias is an extra weight on a
/// constant-1 input and is regularized with w. The epoch-end iterate with the
/// lowest objective is kept. Identical inputs and seed give identical models.
ClassifierModel train_svm(std::span<const LabeledFeature> examples, const SvmOptions& options,
                          const RegionLayout& layout = {}, SvmTrainingLog* log = nullptr);

/// The objective above for a single class's weights.
double svm_objective(std::span<const LabeledFeature> examples, const std::string& positive,
                     std::span<const double> w, double b, double c);

struct Prediction {
  std::size_t index = 0;
  std::string label;
  std::vector<double> scores;
};

/// scores_c = w_c . x + b_c; label = argmax, first class wins ties.
Prediction predict(const ClassifierModel& model, const FeatureVector& feature);

}  // namespace pt
