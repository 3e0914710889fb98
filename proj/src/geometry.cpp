#include "parttransfer/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parttransfer/error.hpp"

namespace pt {

bool BoundingBox::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h);
}

bool ImageSize::valid() const {
  return std::isfinite(width) && std::isfinite(height) && width > 0.0 && height > 0.0;
}

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::Union: return "union";
    case FusionMode::Average: return "average";
    case FusionMode::Intersection: return "intersection";
  }
  return "union";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "union") return FusionMode::Union;
  if (text == "average") return FusionMode::Average;
  if (text == "intersection") return FusionMode::Intersection;
  fail(ErrorCode::InvalidArgument, "unknown fusion mode '" + std::string(text) + "'");
}

BoundingBox map_box(const BoundingBox& box, const ImageSize& from, const ImageSize& to) {
  if (!from.valid() || !to.valid()) {
    fail(ErrorCode::InvalidSize, "image sizes must be positive and finite");
  }
  if (from == to) return box;
  const double sx = to.width / from.width;
  const double sy = to.height / from.height;
  return {box.x * sx, box.y * sy, box.w * sx, box.h * sy};
}

BoundingBox fuse_boxes(std::span<const BoundingBox> boxes, FusionMode mode) {
  if (boxes.empty()) fail(ErrorCode::EmptyInput, "cannot fuse an empty list of boxes");
  if (boxes.size() == 1) return boxes.front();

  switch (mode) {
    case FusionMode::Union: {
      double x1 = boxes[0].x, y1 = boxes[0].y;
      double x2 = boxes[0].right(), y2 = boxes[0].bottom();
      for (const auto& b : boxes.subspan(1)) {
        x1 = std::min(x1, b.x);
        y1 = std::min(y1, b.y);
        x2 = std::max(x2, b.right());
        y2 = std::max(y2, b.bottom());
      }
      return BoundingBox::from_corners(x1, y1, x2, y2);
    }
    case FusionMode::Average: {
      BoundingBox sum;
      for (const auto& b : boxes) {
        sum.x += b.x;
        sum.y += b.y;
        sum.w += b.w;
        sum.h += b.h;
      }
      const double n = static_cast<double>(boxes.size());
      return {sum.x / n, sum.y / n, sum.w / n, sum.h / n};
    }
    case FusionMode::Intersection: {
      double x1 = boxes[0].x, y1 = boxes[0].y;
      double x2 = boxes[0].right(), y2 = boxes[0].bottom();
      for (const auto& b : boxes.subspan(1)) {
        x1 = std::max(x1, b.x);
        y1 = std::max(y1, b.y);
        x2 = std::min(x2, b.right());
        y2 = std::min(y2, b.bottom());
      }
      if (!(x2 > x1) || !(y2 > y1)) {
        fail(ErrorCode::NoOverlap, "boxes have no common overlap");
      }
      return BoundingBox::from_corners(x1, y1, x2, y2);
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown fusion mode");
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
  // Areas from the same corner differences as the intersection, so a box
  // against itself gives exactly 1.
  const double area_a = (a.right() - a.x) * (a.bottom() - a.y);
  const double area_b = (b.right() - b.x) * (b.bottom() - b.y);
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox clamp_box(const BoundingBox& box, const ImageSize& size) {
  if (!size.valid()) fail(ErrorCode::InvalidSize, "image size must be positive and finite");
  const double x1 = std::max(box.x, 0.0);
  const double y1 = std::max(box.y, 0.0);
  const double x2 = std::min(box.right(), size.width);
  const double y2 = std::min(box.bottom(), size.height);
  if (!(x2 > x1) || !(y2 > y1)) {
    fail(ErrorCode::DegenerateBox, "box " + to_string(box) + " lies outside the image");
  }
  if (x1 == box.x && y1 == box.y && x2 == box.right() && y2 == box.bottom()) return box;
  return BoundingBox::from_corners(x1, y1, x2, y2);
}

BoundingBox hull(const BoundingBox& a, const BoundingBox& b) {
  const BoundingBox pair[2] = {a, b};
  return fuse_boxes(pair, FusionMode::Union);
}

bool contains(const BoundingBox& outer, const BoundingBox& inner, double tol) {
  return inner.x >= outer.x - tol && inner.y >= outer.y - tol &&
         inner.right() <= outer.right() + tol && inner.bottom() <= outer.bottom() + tol;
}

BoundingBox compose(const BoundingBox& in_crop, const BoundingBox& crop) {
  return {crop.x + in_crop.x, crop.y + in_crop.y, in_crop.w, in_crop.h};
}

BoundingBox relative_to(const BoundingBox& box, const BoundingBox& crop) {
  return {box.x - crop.x, box.y - crop.y, box.w, box.h};
}

std::string to_string(const BoundingBox& box) {
  std::ostringstream os;
  os << '(' << box.x << ", " << box.y << ", " << box.w << ", " << box.h << ')';
  return os.str();
}

}  // namespace pt
