#include "parttransfer/model_io.hpp"

#include <fstream>
#include <string>

#include <json.hpp>

#include "parttransfer/error.hpp"
#include "parttransfer/fvec.hpp"

namespace pt {

using nlohmann::json;

namespace {

json read_header(std::istream& in, const std::string& what, const std::string& kind) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Parse, "'" + what + "': missing model header");
  json header;
  try {
    header = json::parse(line);
  } catch (const std::exception& e) {
    fail(ErrorCode::Parse, "'" + what + "': bad model header: " + e.what());
  }
  if (header.value("kind", "") != kind) {
    fail(ErrorCode::Parse, "'" + what + "' is not a " + kind + " model");
  }
  return header;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write model '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open model '" + path.string() + "'");
  return in;
}

}  // namespace

void write_regressor(std::ostream& out, const RegressorModel& model) {
  json header = {{"kind", "regressor"},
                 {"dim", model.dim},
                 {"lambda", model.lambda},
                 {"convention", std::string(to_string(model.convention))},
                 {"bias_feature", model.bias_feature}};
  json classes = json::array();
  std::vector<FeatureVector> rows;
  for (const auto& [label, targets] : model.weights) {
    classes.push_back(label);
    for (const auto& w : targets) rows.emplace_back(w);
  }
  header["classes"] = classes;
  out << header.dump() << '\n';
  write_fvec(out, rows, static_cast<std::uint32_t>(model.dim));
}

void write_regressor(const std::filesystem::path& path, const RegressorModel& model) {
  auto out = open_out(path);
  write_regressor(out, model);
}

RegressorModel read_regressor(std::istream& in, const std::string& what) {
  const json header = read_header(in, what, "regressor");
  RegressorModel model;
  try {
    model.dim = header.at("dim").get<std::size_t>();
    model.lambda = header.at("lambda").get<double>();
    model.convention = parse_target_convention(header.at("convention").get<std::string>());
    model.bias_feature = header.value("bias_feature", false);
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, "'" + what + "': " + e.what());
  }
  const auto classes = header.at("classes").get<std::vector<std::string>>();
  const auto rows = read_fvec(in, what);
  if (rows.size() != classes.size() * 4) {
    fail(ErrorCode::Parse, "'" + what + "': expected " + std::to_string(classes.size() * 4) +
                               " weight rows, found " + std::to_string(rows.size()));
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto& targets = model.weights[classes[c]];
    for (std::size_t k = 0; k < 4; ++k) {
      if (rows[c * 4 + k].dim() != model.dim) fail(ErrorCode::Parse, "'" + what + "': dim mismatch");
      targets[k] = rows[c * 4 + k].values;
    }
  }
  return model;
}

RegressorModel read_regressor(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_regressor(in, path.string());
}

void write_classifier(std::ostream& out, const ClassifierModel& model) {
  json layout = json::array();
  for (const auto& r : model.layout) layout.push_back({{"name", r.name}, {"dim", r.dim}});
  const json header = {{"kind", "classifier"}, {"classes", model.classes},
                       {"biases", model.biases}, {"layout", layout},
                       {"C", model.c}};
  out << header.dump() << '\n';
  std::vector<FeatureVector> rows;
  for (const auto& w : model.weights) rows.emplace_back(w);
  write_fvec(out, rows, static_cast<std::uint32_t>(model.dim()));
}

void write_classifier(const std::filesystem::path& path, const ClassifierModel& model) {
  auto out = open_out(path);
  write_classifier(out, model);
}

ClassifierModel read_classifier(std::istream& in, const std::string& what) {
  const json header = read_header(in, what, "classifier");
  ClassifierModel model;
  try {
    model.classes = header.at("classes").get<std::vector<std::string>>();
    model.biases = header.at("biases").get<std::vector<double>>();
    model.c = header.at("C").get<double>();
    for (const auto& r : header.at("layout")) {
      model.layout.push_back({r.at("name").get<std::string>(), r.at("dim").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, "'" + what + "': " + e.what());
  }
  for (auto& row : read_fvec(in, what)) model.weights.push_back(std::move(row.values));
  if (model.weights.size() != model.classes.size() || model.biases.size() != model.classes.size()) {
    fail(ErrorCode::Parse, "'" + what + "': class, bias and weight counts differ");
  }
  if (!model.layout.empty() && layout_dim(model.layout) != model.dim()) {
    fail(ErrorCode::Parse, "'" + what + "': layout does not match weight dim");
  }
  return model;
}

ClassifierModel read_classifier(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_classifier(in, path.string());
}

}  // namespace pt
