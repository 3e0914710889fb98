#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "parttransfer/error.hpp"
#include "parttransfer/features.hpp"
#include "parttransfer/simd.hpp"

namespace pt {
namespace {

constexpr int kSide = kDescriptorResample;
constexpr int kCellSide = kSide / kDescriptorCells;

using Patch = std::array<double, kSide * kSide>;

// Bilinear sample at continuous pixel-index coordinates (pixel k is centred
// at k). Out-of-range neighbours replicate the border. Interpolating as
// a + t * (b - a) keeps constant regions exactly constant.
double sample(const RasterImage& img, double fx, double fy) {
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double tx = fx - x0f;
  const double ty = fy - y0f;
  const int x0 = std::clamp(static_cast<int>(x0f), 0, img.width() - 1);
  const int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, img.width() - 1);
  const int y0 = std::clamp(static_cast<int>(y0f), 0, img.height() - 1);
  const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, img.height() - 1);
  const double a0 = img.at(x0, y0), b0 = img.at(x1, y0);
  const double a1 = img.at(x0, y1), b1 = img.at(x1, y1);
  const double top = a0 + tx * (b0 - a0);
  const double bottom = a1 + tx * (b1 - a1);
  return top + ty * (bottom - top);
}

Patch resample(const RasterImage& img, const BoundingBox& region) {
  Patch patch{};
  const double sx = region.w / kSide;
  const double sy = region.h / kSide;
  for (int j = 0; j < kSide; ++j) {
    const double fy = region.y + (j + 0.5) * sy - 0.5;
    for (int i = 0; i < kSide; ++i) {
      const double fx = region.x + (i + 0.5) * sx - 0.5;
      patch[j * kSide + i] = sample(img, fx, fy);
    }
  }
  return patch;
}

}  // namespace

FeatureVector grid_descriptor(const RasterImage& image, const BoundingBox& region) {
  if (!region.finite()) fail(ErrorCode::DegenerateBox, "non-finite descriptor region");
  const BoundingBox crop = clamp_box(region, image.size());
  const Patch patch = resample(image, crop);

  std::vector<double> hist(kDescriptorDim, 0.0);
  constexpr double kBinWidth = 2.0 * std::numbers::pi / kDescriptorBins;
  auto px = [&](int i, int j) {
    return patch[std::clamp(j, 0, kSide - 1) * kSide + std::clamp(i, 0, kSide - 1)];
  };
  for (int j = 0; j < kSide; ++j) {
    for (int i = 0; i < kSide; ++i) {
      const double gx = 0.5 * (px(i + 1, j) - px(i - 1, j));
      const double gy = 0.5 * (px(i, j + 1) - px(i, j - 1));
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      const int bin = std::min(static_cast<int>(angle / kBinWidth), kDescriptorBins - 1);
      const int cell = (j / kCellSide) * kDescriptorCells + (i / kCellSide);
      hist[static_cast<std::size_t>(cell * kDescriptorBins + bin)] += mag;
    }
  }

  const double sq_norm = simd::dot(hist, hist);
  if (!(sq_norm > 0.0)) {
    std::fill(hist.begin(), hist.end(), 1.0 / std::sqrt(static_cast<double>(kDescriptorDim)));
    return FeatureVector(std::move(hist));
  }
  simd::scale(1.0 / std::sqrt(sq_norm), hist);
  return FeatureVector(std::move(hist));
}

}  // namespace pt
