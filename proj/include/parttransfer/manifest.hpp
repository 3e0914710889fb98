#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parttransfer/geometry.hpp"

namespace pt {

/// Where a stored feature lives: a row of an FVEC file, or inline values.
struct FeatureRef {
  std::string file;
  std::size_t row = 0;
  std::vector<double> inline_values;

  bool is_inline() const { return file.empty(); }
};

/// Names which annotation a transfer moves: the object box or a named part.
class BoxField {
 public:
  static BoxField object() { return BoxField(""); }
  static BoxField part(std::string name) { return BoxField(std::move(name)); }

  bool is_object() const { return part_.empty(); }
  const std::string& part_name() const { return part_; }
  std::string name() const { return is_object() ? "object" : part_; }

  friend bool operator==(const BoxField&, const BoxField&) = default;

 private:
  explicit BoxField(std::string part) : part_(std::move(part)) {}
  std::string part_;
};

struct AnnotatedImage {
  std::string id;
  ImageSize size;
  std::optional<std::string> class_label;
  std::optional<BoundingBox> object_box;
  /// Part name -> box; an explicit null marks an annotated-as-absent part.
  std::map<std::string, std::optional<BoundingBox>> parts;
  /// Stage name ("full", "object", "part:<name>") -> stored feature.
  std::map<std::string, FeatureRef> features;
  /// Optional raster asset (8-bit PGM) for region-sensitive features.
  std::optional<std::string> image;

  std::optional<BoundingBox> box(const BoxField& field) const;
};

// One JSON object per line:
//   {"id": "a", "width": 500, "height": 375, "class": "001",
//    "object_box": [x, y, w, h], "parts": {"head": [x, y, w, h], "body": null},
//    "features": {"full": {"file": "train_full.fvec", "row": 0}, "object": [0.1, ...]},
//    "image": "images/a.pgm"}
// Blank lines and lines starting with '#' are ignored. Relative paths are
// resolved against `base_dir`.
std::vector<AnnotatedImage> parse_manifest(std::istream& in, const std::string& source,
                                           const std::filesystem::path& base_dir = {});
std::vector<AnnotatedImage> read_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, const std::vector<AnnotatedImage>& records);
void write_manifest(const std::filesystem::path& path, const std::vector<AnnotatedImage>& records);

/// Checks the record-level invariants: unique ids, positive sizes, boxes
/// valid and inside their image. Errors name the offending record.
void validate_records(const std::vector<AnnotatedImage>& records);

}  // namespace pt
