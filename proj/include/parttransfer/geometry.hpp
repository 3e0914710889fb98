#pragma once

#include <span>
#include <string>
#include <string_view>

namespace pt {

/// Axis-aligned box in continuous pixel coordinates. Origin is the top-left
/// image corner and (x, y) is the box's upper-left corner.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w > 0.0 && h > 0.0 ? w * h : 0.0; }
  bool finite() const;
  bool valid() const { return finite() && w > 0.0 && h > 0.0; }

  static BoundingBox from_corners(double x1, double y1, double x2, double y2) {
    return {x1, y1, x2 - x1, y2 - y1};
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ImageSize {
  double width = 0.0;
  double height = 0.0;

  bool valid() const;
  BoundingBox frame() const { return {0.0, 0.0, width, height}; }

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// The frame boxes are fused in. Union, average and intersection are all
/// invariant to the choice of common resolution, so the unit square is used.
inline constexpr ImageSize kUnitFrame{1.0, 1.0};

enum class FusionMode { Union, Average, Intersection };

std::string_view to_string(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view text);

/// Rescales `box` from an image of size `from` to one of size `to`, per axis.
/// Throws InvalidSize when either size is non-positive.
BoundingBox map_box(const BoundingBox& box, const ImageSize& from, const ImageSize& to);

/// Fuses boxes that share one coordinate frame.
///   Union        smallest box containing every input
///   Average      component-wise mean of (x, y, w, h)
///   Intersection region common to every input (NoOverlap if there is none)
BoundingBox fuse_boxes(std::span<const BoundingBox> boxes, FusionMode mode);

/// Intersection over union. Degenerate (zero-area) inputs give 0, never NaN.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Intersects `box` with the image rectangle; DegenerateBox if nothing is left.
BoundingBox clamp_box(const BoundingBox& box, const ImageSize& size);

/// Smallest box containing both inputs.
BoundingBox hull(const BoundingBox& a, const BoundingBox& b);

/// True when `inner` lies inside `outer`, allowing `tol` pixels of slack.
bool contains(const BoundingBox& outer, const BoundingBox& inner, double tol = 0.0);

/// A box expressed in the frame of `crop` translated back into the frame the
/// crop was taken from.
BoundingBox compose(const BoundingBox& in_crop, const BoundingBox& crop);

/// Inverse of compose: `box` re-expressed relative to the crop's origin.
BoundingBox relative_to(const BoundingBox& box, const BoundingBox& crop);

inline ImageSize frame_of(const BoundingBox& crop) { return {crop.w, crop.h}; }

std::string to_string(const BoundingBox& box);

}  // namespace pt
