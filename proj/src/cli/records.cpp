#include "parttransfer/cli/records.hpp"

#include <fstream>

#include "parttransfer/error.hpp"

namespace pt::cli {

using nlohmann::json;

namespace {

json box_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

BoundingBox box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) fail(ErrorCode::Parse, "box must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json trace_json(const TransferTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json neighbors = json::array();
    for (const auto& n : s.neighbors) neighbors.push_back(json::array({n.id, n.distance}));
    steps.push_back({{"box", box_json(s.box)}, {"neighbors", neighbors}});
  }
  return steps;
}

TransferTrace trace_from(const json& j) {
  TransferTrace trace;
  for (const auto& s : j.value("trace", json::array())) {
    TraceStep step{box_from(s.at("box")), {}};
    for (const auto& n : s.at("neighbors")) {
      step.neighbors.push_back({n.at(0).get<std::string>(), n.at(1).get<double>()});
    }
    trace.steps.push_back(std::move(step));
  }
  if (j.contains("termination") && !j.at("termination").is_null()) {
    trace.reason = parse_termination(j.at("termination").get<std::string>());
  }
  return trace;
}

json localization_body(const Localization& loc, bool with_reason) {
  json j = {{"box", box_json(loc.box)},
            {"iterations", loc.trace.steps.size()},
            {"trace", trace_json(loc.trace)}};
  j["termination"] = with_reason ? json(std::string(to_string(loc.trace.reason))) : json(nullptr);
  return j;
}

}  // namespace

json localization_json(const ImageLocalization& loc) {
  json j = {{"id", loc.id}, {"oracle_object", loc.oracle_object}};
  if (loc.object) {
    const bool traced = !loc.object->trace.steps.empty();
    j["object"] = box_json(loc.object->box);
    j["termination"] = traced ? json(std::string(to_string(loc.object->trace.reason))) : json(nullptr);
    j["iterations"] = loc.object->trace.steps.size();
    j["trace"] = trace_json(loc.object->trace);
  } else {
    j["object"] = nullptr;
  }
  json parts = json::object();
  for (const auto& [name, part] : loc.parts) {
    parts[name] = part ? localization_body(*part, true) : json(nullptr);
  }
  j["parts"] = parts;
  if (!loc.error.empty()) j["error"] = loc.error;
  return j;
}

ImageLocalization localization_from_json(const json& j) {
  ImageLocalization loc;
  loc.id = j.at("id").get<std::string>();
  loc.oracle_object = j.value("oracle_object", false);
  if (j.contains("object") && !j.at("object").is_null()) {
    loc.object = Localization{box_from(j.at("object")), trace_from(j)};
  }
  if (j.contains("parts")) {
    for (const auto& [name, part] : j.at("parts").items()) {
      if (part.is_null()) {
        loc.parts[name] = std::nullopt;
      } else {
        loc.parts[name] = Localization{box_from(part.at("box")), trace_from(part)};
      }
    }
  }
  loc.error = j.value("error", "");
  return loc;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  for (const auto& line : lines) out << line.dump() << '\n';
  if (!out) fail(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::vector<json> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_localizations(const std::filesystem::path& path,
                         const std::vector<ImageLocalization>& results) {
  std::vector<json> lines;
  lines.reserve(results.size());
  for (const auto& r : results) lines.push_back(localization_json(r));
  write_jsonl(path, lines);
}

std::vector<ImageLocalization> read_localizations(const std::filesystem::path& path) {
  std::vector<ImageLocalization> out;
  std::size_t n = 0;
  for (const auto& j : read_jsonl(path)) {
    ++n;
    try {
      out.push_back(localization_from_json(j));
    } catch (const std::exception& e) {
      fail(ErrorCode::Parse, path.string() + ": record " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_class_predictions(const std::filesystem::path& path,
                             const std::vector<ClassPrediction>& predictions) {
  std::vector<json> lines;
  for (const auto& p : predictions) {
    json scores = json::array();
    for (const auto& [label, score] : p.top) scores.push_back(json::array({label, score}));
    lines.push_back({{"id", p.id}, {"class", p.label}, {"scores", scores}});
  }
  write_jsonl(path, lines);
}

std::map<std::string, std::string> read_class_predictions(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      out[j.at("id").get<std::string>()] = j.at("class").get<std::string>();
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pt::cli
