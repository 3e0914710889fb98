#include "parttransfer/recognition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "parttransfer/error.hpp"
#include "parttransfer/parallel.hpp"
#include "parttransfer/seeding.hpp"
#include "parttransfer/simd.hpp"

namespace pt {

RegionLayout default_layout(std::size_t dim) {
  return {{"full", dim}, {"object", dim}, {"head", dim}, {"body", dim}};
}

std::size_t layout_dim(const RegionLayout& layout) {
  std::size_t d = 0;
  for (const auto& r : layout) d += r.dim;
  return d;
}

FeatureVector concat_regions(const std::map<std::string, std::optional<FeatureVector>>& features,
                             const RegionLayout& layout) {
  std::vector<double> out;
  out.reserve(layout_dim(layout));
  for (const auto& region : layout) {
    auto it = features.find(region.name);
    if (it == features.end() || !it->second) {
      out.insert(out.end(), region.dim, 0.0);
      continue;
    }
    const FeatureVector& f = *it->second;
    if (f.dim() != region.dim) {
      fail(ErrorCode::DimensionMismatch, "region '" + region.name + "' has dim " +
                                             std::to_string(f.dim()) + ", layout expects " +
                                             std::to_string(region.dim));
    }
    out.insert(out.end(), f.values.begin(), f.values.end());
  }
  return FeatureVector(std::move(out));
}

double svm_objective(std::span<const LabeledFeature> examples, const std::string& positive,
                     std::span<const double> w, double b, double c) {
  double hinge = 0.0;
  for (const auto& ex : examples) {
    const double y = ex.label == positive ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - y * (simd::dot(w, ex.feature.view()) + b));
  }
  return (simd::dot(w, w) + b * b) / (2.0 * c) + hinge;
}

namespace {

struct BinaryFit {
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> objective;
  std::vector<double> kept_objective;
  int kept_epoch = 0;
};

BinaryFit train_binary(std::span<const LabeledFeature> examples, const std::string& positive,
                       const SvmOptions& opt, std::uint64_t seed) {
  const std::size_t n = examples.size();
  const std::size_t d = examples.front().feature.dim();
  const double lambda = 1.0 / (opt.c * static_cast<double>(n));

  // w = scale * v; the bias is the last component of v.
  std::vector<double> v(d + 1, 0.0);
  double scale = 1.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);

  BinaryFit best;
  double best_objective = std::numeric_limits<double>::infinity();
  std::uint64_t t = 0;
  std::vector<double> w(d);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      ++t;
      const auto& ex = examples[idx];
      const double y = ex.label == positive ? 1.0 : -1.0;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double margin =
          y * scale * (simd::dot({v.data(), d}, ex.feature.view()) + v[d]);
      const double shrink = 1.0 - 1.0 / static_cast<double>(t);
      if (shrink == 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        scale = 1.0;
      } else {
        scale *= shrink;
      }
      if (margin < 1.0) {
        const double step = eta * y / scale;
        simd::axpy(step, ex.feature.view(), {v.data(), d});
        v[d] += step;
      }
      if (scale < 1e-9) {
        simd::scale(scale, v);
        scale = 1.0;
      }
    }
    for (std::size_t k = 0; k < d; ++k) w[k] = scale * v[k];
    const double b = scale * v[d];
    const double obj = svm_objective(examples, positive, w, b, opt.c);
    best.objective.push_back(obj);
    if (obj < best_objective) {
      best_objective = obj;
      best.w = w;
      best.b = b;
      best.kept_epoch = epoch;
    }
    best.kept_objective.push_back(best_objective);
  }
  return best;
}

}  // namespace

ClassifierModel train_svm(std::span<const LabeledFeature> examples, const SvmOptions& options,
                          const RegionLayout& layout, SvmTrainingLog* log) {
  if (examples.empty()) fail(ErrorCode::EmptyInput, "no training examples");
  if (!(options.c > 0.0)) fail(ErrorCode::InvalidArgument, "SVM C must be positive");
  if (options.epochs < 1) fail(ErrorCode::InvalidArgument, "SVM needs at least one epoch");
  const std::size_t d = examples.front().feature.dim();
  if (d == 0) fail(ErrorCode::DimensionMismatch, "empty training features");
  std::set<std::string> labels;
  for (const auto& ex : examples) {
    if (ex.feature.dim() != d) fail(ErrorCode::DimensionMismatch, "training features differ in dim");
    labels.insert(ex.label);
  }
  if (labels.size() < 2) fail(ErrorCode::InvalidArgument, "one-vs-all training needs >= 2 classes");
  if (!layout.empty() && layout_dim(layout) != d) {
    fail(ErrorCode::DimensionMismatch, "region layout does not match feature dim");
  }

  ClassifierModel model;
  model.classes.assign(labels.begin(), labels.end());
  model.layout = layout.empty() ? RegionLayout{{"feature", d}} : layout;
  model.c = options.c;
  model.weights.resize(model.classes.size());
  model.biases.resize(model.classes.size());
  std::vector<BinaryFit> fits(model.classes.size());
  parallel_for(model.classes.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      fits[k] = train_binary(examples, model.classes[k], options, derive_seed(options.seed, k));
    }
  });
  for (std::size_t k = 0; k < fits.size(); ++k) {
    model.weights[k] = fits[k].w;
    model.biases[k] = fits[k].b;
  }
  if (log != nullptr) {
    log->objective.clear();
    log->kept_objective.clear();
    log->kept_epoch.clear();
    for (auto& f : fits) {
      log->objective.push_back(std::move(f.objective));
      log->kept_objective.push_back(std::move(f.kept_objective));
      log->kept_epoch.push_back(f.kept_epoch);
    }
  }
  return model;
}

Prediction predict(const ClassifierModel& model, const FeatureVector& feature) {
  if (model.classes.empty()) fail(ErrorCode::InvalidArgument, "classifier has no classes");
  if (feature.dim() != model.dim()) {
    fail(ErrorCode::DimensionMismatch, "feature dim " + std::to_string(feature.dim()) +
                                           " does not match classifier dim " +
                                           std::to_string(model.dim()));
  }
  Prediction p;
  p.scores.resize(model.classes.size());
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    p.scores[k] = simd::dot(model.weights[k], feature.view()) + model.biases[k];
    if (p.scores[k] > p.scores[p.index]) p.index = k;
  }
  p.label = model.classes[p.index];
  return p;
}

}  // namespace pt
