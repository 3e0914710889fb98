#include "parttransfer/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "parttransfer/error.hpp"

namespace pt {

using nlohmann::json;

std::optional<BoundingBox> AnnotatedImage::box(const BoxField& field) const {
  if (field.is_object()) return object_box;
  auto it = parts.find(field.part_name());
  if (it == parts.end()) return std::nullopt;
  return it->second;
}

namespace {

BoundingBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json box_to_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  if (base.empty() || path.is_absolute()) return p;
  return (base / path).lexically_normal().string();
}

AnnotatedImage record_from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw std::invalid_argument("record must be a JSON object");
  AnnotatedImage r;
  r.id = j.at("id").get<std::string>();
  if (r.id.empty()) throw std::invalid_argument("empty id");
  r.size = {j.at("width").get<double>(), j.at("height").get<double>()};
  if (auto it = j.find("class"); it != j.end() && !it->is_null()) {
    r.class_label = it->is_string() ? it->get<std::string>() : it->dump();
  }
  if (auto it = j.find("object_box"); it != j.end() && !it->is_null()) {
    r.object_box = box_from_json(*it);
  }
  if (auto it = j.find("parts"); it != j.end() && !it->is_null()) {
    for (const auto& [name, value] : it->items()) {
      if (name.empty()) throw std::invalid_argument("empty part name");
      r.parts[name] = value.is_null() ? std::nullopt : std::optional(box_from_json(value));
    }
  }
  if (auto it = j.find("features"); it != j.end() && !it->is_null()) {
    for (const auto& [stage, value] : it->items()) {
      FeatureRef ref;
      if (value.is_array()) {
        ref.inline_values = value.get<std::vector<double>>();
      } else {
        ref.file = resolve(base, value.at("file").get<std::string>());
        ref.row = value.at("row").get<std::size_t>();
      }
      r.features[stage] = std::move(ref);
    }
  }
  if (auto it = j.find("image"); it != j.end() && !it->is_null()) {
    r.image = resolve(base, it->get<std::string>());
  }
  return r;
}

json record_to_json(const AnnotatedImage& r) {
  json j;
  j["id"] = r.id;
  j["width"] = r.size.width;
  j["height"] = r.size.height;
  if (r.class_label) j["class"] = *r.class_label;
  if (r.object_box) j["object_box"] = box_to_json(*r.object_box);
  if (!r.parts.empty()) {
    json parts = json::object();
    for (const auto& [name, box] : r.parts) parts[name] = box ? box_to_json(*box) : json(nullptr);
    j["parts"] = parts;
  }
  if (!r.features.empty()) {
    json features = json::object();
    for (const auto& [stage, ref] : r.features) {
      if (ref.is_inline()) {
        features[stage] = ref.inline_values;
      } else {
        features[stage] = {{"file", ref.file}, {"row", ref.row}};
      }
    }
    j["features"] = features;
  }
  if (r.image) j["image"] = *r.image;
  return j;
}

bool inside(const BoundingBox& b, const ImageSize& s) {
  constexpr double kTol = 1e-6;
  return b.x >= -kTol && b.y >= -kTol && b.right() <= s.width + kTol &&
         b.bottom() <= s.height + kTol;
}

}  // namespace

std::vector<AnnotatedImage> parse_manifest(std::istream& in, const std::string& source,
                                           const std::filesystem::path& base_dir) {
  std::vector<AnnotatedImage> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      records.push_back(record_from_json(json::parse(line), base_dir));
    } catch (const std::exception& e) {
      fail(ErrorCode::Parse, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<AnnotatedImage> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.string(), path.parent_path());
}

void write_manifest(std::ostream& out, const std::vector<AnnotatedImage>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void write_manifest(const std::filesystem::path& path, const std::vector<AnnotatedImage>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write manifest '" + path.string() + "'");
  write_manifest(out, records);
}

void validate_records(const std::vector<AnnotatedImage>& records) {
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) fail(ErrorCode::DuplicateId, "duplicate record id '" + r.id + "'");
    if (!r.size.valid()) fail(ErrorCode::Validation, "record '" + r.id + "': invalid image size");
    if (r.object_box && (!r.object_box->valid() || !inside(*r.object_box, r.size))) {
      fail(ErrorCode::Validation, "record '" + r.id + "': object_box " + to_string(*r.object_box) +
                                      " is not a valid box inside the image");
    }
    for (const auto& [name, box] : r.parts) {
      if (box && (!box->valid() || !inside(*box, r.size))) {
        fail(ErrorCode::Validation, "record '" + r.id + "': part '" + name + "' box " +
                                        to_string(*box) + " is not a valid box inside the image");
      }
    }
  }
}

}  // namespace pt
