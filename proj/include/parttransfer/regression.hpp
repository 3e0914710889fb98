#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parttransfer/features.hpp"
#include "parttransfer/geometry.hpp"

namespace pt {

/// How x/y offsets are normalized. SizeNormalized divides by the predicted
/// box's width/height and is the inverse of decode_box; Literal divides by
/// the predicted x/y coordinate itself and exists only for comparison.
enum class TargetConvention { SizeNormalized, Literal };

std::string_view to_string(TargetConvention c);
TargetConvention parse_target_convention(std::string_view text);

/// Regression targets in (x, y, w, h) order.
using BoxDeltas = std::array<double, 4>;

/// Targets mapping predicted box `t` onto ground truth `g`:
///   (g.x - t.x) / t.w,  (g.y - t.y) / t.h,  log(g.w / t.w),  log(g.h / t.h)
BoxDeltas encode_targets(const BoundingBox& t, const BoundingBox& g,
                         TargetConvention convention = TargetConvention::SizeNormalized);

/// Applies deltas to `t`:
///   x = t.w * f.x + t.x,  y = t.h * f.y + t.y,  w = t.w * exp(f.w),  h = t.h * exp(f.h)
BoundingBox decode_box(const BoundingBox& t, const BoxDeltas& f,
                       TargetConvention convention = TargetConvention::SizeNormalized);

struct RegressionPair {
  BoundingBox predicted;
  BoundingBox truth;
  FeatureVector feature;
  std::string class_label;
};

struct RegressorModel {
  /// Class label -> weights for targets x, y, w, h.
  std::map<std::string, std::array<std::vector<double>, 4>> weights;
  std::size_t dim = 0;
  double lambda = 1.0;
  TargetConvention convention = TargetConvention::SizeNormalized;
  /// When set, a constant 1 is appended to every feature (an intercept);
  /// `dim` then counts it.
  bool bias_feature = false;

  /// Class key under which class-agnostic models are stored.
  static constexpr std::string_view kAnyClass = "*";
};

/// Closed-form ridge solution w = (X^T X + lambda I)^-1 X^T y for each column
/// of `targets`, via Cholesky. `design` is row-major n x d. Solves the smaller
/// of the primal (d x d) and dual (n x n) systems.
std::vector<std::vector<double>> solve_ridge(std::span<const double> design, std::size_t rows,
                                             std::size_t cols,
                                             const std::vector<std::vector<double>>& targets,
                                             double lambda);

/// Fits one four-target ridge regressor per class label.
RegressorModel fit_regressor(std::span<const RegressionPair> pairs, double lambda,
                             TargetConvention convention = TargetConvention::SizeNormalized,
                             bool bias_feature = false);

/// Refined box for class `class_label`. UnknownClass when the model has
/// neither that class nor a class-agnostic entry.
BoundingBox refine_box(const RegressorModel& model, const std::string& class_label,
                       const BoundingBox& t, const FeatureVector& feature);

/// Ridge objective sum_i (y_i - w.x_i)^2 + lambda |w|^2.
double ridge_objective(std::span<const double> design, std::size_t rows, std::size_t cols,
                       std::span<const double> targets, std::span<const double> w, double lambda);

}  // namespace pt
