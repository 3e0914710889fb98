#include "parttransfer/cli/run_config.hpp"

#include <fstream>

#include "parttransfer/error.hpp"

namespace pt::cli {

using nlohmann::json;

void RunConfig::validate() const {
  transfer.validate();
  if (!(regression.lambda > 0.0)) fail(ErrorCode::Config, "regression.lambda must be positive");
  if (!(svm.c > 0.0)) fail(ErrorCode::Config, "svm.C must be positive");
  if (svm.epochs < 1) fail(ErrorCode::Config, "svm.epochs must be >= 1");
  if (svm.regions.empty()) fail(ErrorCode::Config, "svm.regions must not be empty");
  if (evaluation.thresholds.empty()) fail(ErrorCode::Config, "evaluation.thresholds must not be empty");
  for (double t : evaluation.thresholds) {
    if (!(t > 0.0 && t <= 1.0)) fail(ErrorCode::Config, "evaluation thresholds must lie in (0, 1]");
  }
}

json to_json(const RunConfig& c) {
  const auto& p = c.paths;
  const auto& t = c.transfer;
  return {
      {"paths",
       {{"train", p.train},
        {"test", p.test},
        {"regressor", p.regressor},
        {"classifier", p.classifier},
        {"raw_classifier", p.raw_classifier},
        {"localizations", p.localizations},
        {"oracle_localizations", p.oracle_localizations},
        {"predictions", p.predictions},
        {"output_dir", p.output_dir}}},
      {"transfer",
       {{"M", t.neighbors},
        {"fusion", std::string(to_string(t.fusion))},
        {"max_iters", t.max_iters},
        {"stability_iou", t.stability_iou},
        {"score_threshold", t.score_threshold ? json(*t.score_threshold) : json(nullptr)},
        {"metric", std::string(to_string(t.metric))},
        {"common_size", t.common_size}}},
      {"parts", c.parts},
      {"regression",
       {{"lambda", c.regression.lambda},
        {"convention", std::string(to_string(c.regression.convention))},
        {"apply_to_parts", c.regression.apply_to_parts},
        {"bias_feature", c.regression.bias_feature},
        {"class_agnostic", c.regression.class_agnostic},
        {"fallback", c.regression.fallback}}},
      {"svm", {{"C", c.svm.c}, {"epochs", c.svm.epochs}, {"regions", c.svm.regions}}},
      {"evaluation",
       {{"thresholds", c.evaluation.thresholds},
        {"strict", c.evaluation.strict},
        {"absent_as_miss", c.evaluation.absent_as_miss}}},
      {"threads", c.threads},
      {"seed", c.seed},
      {"format", std::string(to_string(c.format))}};
}

namespace {

// Rejects keys the defaults do not have, so typos in config files surface.
void check_keys(const json& given, const json& known, const std::string& where) {
  if (!given.is_object()) fail(ErrorCode::Config, "'" + where + "' must be an object");
  for (const auto& [key, value] : given.items()) {
    auto it = known.find(key);
    if (it == known.end()) {
      fail(ErrorCode::Config, "unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
    if (it->is_object()) check_keys(value, *it, where.empty() ? key : where + "." + key);
  }
}

}  // namespace

RunConfig run_config_from_json(const json& given) {
  const RunConfig defaults;
  json j = to_json(defaults);
  check_keys(given, j, "");
  j.merge_patch(given);

  RunConfig c;
  try {
    const auto& p = j.at("paths");
    auto path = [&](const char* key) { return p.at(key).get<std::string>(); };
    c.paths = {path("train"),          path("test"),
               path("regressor"),      path("classifier"),
               path("raw_classifier"), path("localizations"),
               path("oracle_localizations"), path("predictions"),
               path("output_dir")};
    const auto& t = j.at("transfer");
    c.transfer.neighbors = t.at("M").get<std::size_t>();
    c.transfer.fusion = parse_fusion_mode(t.at("fusion").get<std::string>());
    c.transfer.max_iters = t.at("max_iters").get<int>();
    c.transfer.stability_iou = t.at("stability_iou").get<double>();
    // merge_patch drops keys patched to null, so the threshold may be missing.
    if (t.contains("score_threshold") && !t.at("score_threshold").is_null()) {
      c.transfer.score_threshold = t.at("score_threshold").get<double>();
    }
    c.transfer.metric = parse_metric(t.at("metric").get<std::string>());
    c.transfer.common_size = t.at("common_size").get<double>();
    c.parts = j.at("parts").get<std::vector<std::string>>();
    const auto& r = j.at("regression");
    c.regression.lambda = r.at("lambda").get<double>();
    c.regression.convention = parse_target_convention(r.at("convention").get<std::string>());
    c.regression.apply_to_parts = r.at("apply_to_parts").get<bool>();
    c.regression.bias_feature = r.at("bias_feature").get<bool>();
    c.regression.class_agnostic = r.at("class_agnostic").get<bool>();
    c.regression.fallback = r.at("fallback").get<bool>();
    const auto& s = j.at("svm");
    c.svm.c = s.at("C").get<double>();
    c.svm.epochs = s.at("epochs").get<int>();
    c.svm.regions = s.at("regions").get<std::vector<std::string>>();
    const auto& e = j.at("evaluation");
    c.evaluation.thresholds = e.at("thresholds").get<std::vector<double>>();
    c.evaluation.strict = e.at("strict").get<bool>();
    c.evaluation.absent_as_miss = e.at("absent_as_miss").get<bool>();
    c.threads = j.at("threads").get<unsigned>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.format = parse_report_format(j.at("format").get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("bad config value: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
  c.validate();
  return c;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open config file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, "'" + path.string() + "': " + e.what());
  }
}

void require_file(const std::string& path, const std::string& field) {
  if (path.empty()) fail(ErrorCode::Config, "missing required path '" + field + "'");
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::Config, field + " '" + path + "' does not exist");
  }
}

}  // namespace pt::cli
