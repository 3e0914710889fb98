#include "parttransfer/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "parttransfer/cli/records.hpp"
#include "parttransfer/error.hpp"
#include "parttransfer/evaluation.hpp"
#include "parttransfer/index.hpp"
#include "parttransfer/manifest.hpp"
#include "parttransfer/model_io.hpp"
#include "parttransfer/parallel.hpp"
#include "parttransfer/pipeline.hpp"
#include "parttransfer/report.hpp"

namespace pt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path output_path(const RunConfig& c, const std::string& name) {
  return fs::path(c.paths.output_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
}

std::vector<AnnotatedImage> load_records(const std::string& path, const std::string& field) {
  require_file(path, field);
  auto records = read_manifest(path);
  validate_records(records);
  return records;
}

std::vector<std::string> part_names(const RunConfig& c, const std::vector<AnnotatedImage>& records) {
  return c.parts.empty() ? annotated_parts(records) : c.parts;
}

// "label=path" -> (label, path)
std::pair<std::string, std::string> split_labeled(const std::string& entry, const char* flag) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size()) {
    fail(ErrorCode::Config, std::string(flag) + " expects label=path, got '" + entry + "'");
  }
  return {entry.substr(0, eq), entry.substr(eq + 1)};
}

PcpOptions pcp_options(const RunConfig& c) {
  return {c.evaluation.strict, c.evaluation.absent_as_miss};
}

}  // namespace

std::string part_model_path(const std::string& object_model, const std::string& part) {
  const fs::path p(object_model);
  return (p.parent_path() / (p.stem().string() + "." + part + p.extension().string())).string();
}

int cmd_build_index(const RunConfig& c, const CommandOptions&, std::ostream& out) {
  const auto records = load_records(c.paths.train, "paths.train");
  const auto provider = load_provider(records);
  const TrainingIndex index = TrainingIndex::build(records, *provider, c.transfer.metric);

  std::set<std::string> classes;
  for (const auto& r : records) {
    if (r.class_label) classes.insert(*r.class_label);
  }
  const json summary = {{"records", index.size()},
                        {"stages", index.stages()},
                        {"dim", provider->dim()},
                        {"metric", std::string(to_string(index.metric()))},
                        {"region_sensitive", provider->region_sensitive()},
                        {"classes", classes.size()},
                        {"parts", annotated_parts(records)}};
  write_text(output_path(c, "index_summary.json"), summary.dump(2) + "\n");
  if (c.format == ReportFormat::Structured) {
    out << summary.dump(2) << '\n';
  } else {
    out << "indexed " << index.size() << " records, dim " << provider->dim() << ", stages:";
    for (const auto& s : index.stages()) out << ' ' << s;
    out << ", classes: " << classes.size() << '\n';
  }
  return 0;
}

int cmd_localize(const RunConfig& c, const CommandOptions& o, std::ostream& out) {
  const auto train = load_records(c.paths.train, "paths.train");
  std::vector<AnnotatedImage> queries =
      o.leave_one_out ? train : load_records(c.paths.test, "paths.test");
  if (!o.only.empty()) {
    std::vector<AnnotatedImage> kept;
    for (const auto& id : o.only) {
      auto it = std::find_if(queries.begin(), queries.end(), [&](const auto& r) { return r.id == id; });
      if (it == queries.end()) fail(ErrorCode::UnknownImage, "--only names unknown image '" + id + "'");
      kept.push_back(*it);
    }
    queries = std::move(kept);
  }

  const auto provider = o.leave_one_out ? load_provider(train) : load_provider(train, queries);
  const TrainingIndex index = TrainingIndex::build(train, *provider, c.transfer.metric);
  LocalizeOptions lo;
  if (o.localize_parts) lo.parts = part_names(c, train);
  lo.seed_oracle_object = o.seed_oracle_object;
  lo.leave_one_out = o.leave_one_out;
  lo.fail_fast = o.fail_fast;
  std::optional<ClassifierModel> raw;
  if (!c.paths.raw_classifier.empty()) {
    require_file(c.paths.raw_classifier, "paths.raw_classifier");
    raw = read_classifier(fs::path(c.paths.raw_classifier));
    lo.raw_classifier = &*raw;
  }

  const TransferModel model = TransferModel::prepare(index, *provider, c.transfer, lo.parts);
  const auto results = localize_batch(queries, model, *provider, c.transfer, lo);
  write_localizations(output_path(c, "localizations.jsonl"), results);

  std::vector<json> errors;
  std::map<std::string, std::size_t> reasons;
  for (const auto& r : results) {
    if (!r.error.empty()) errors.push_back({{"id", r.id}, {"error", r.error}});
    if (r.object && !r.object->trace.steps.empty()) {
      ++reasons[std::string(to_string(r.object->trace.reason))];
    }
  }
  write_jsonl(output_path(c, "localize_errors.jsonl"), errors);

  if (c.format == ReportFormat::Structured) {
    out << json{{"localized", results.size() - errors.size()},
                {"failed", errors.size()},
                {"termination", reasons}}
               .dump(2)
        << '\n';
  } else {
    out << "localized " << results.size() - errors.size() << " of " << results.size()
        << " images (" << errors.size() << " failed)\n";
    for (const auto& [reason, n] : reasons) out << "  " << reason << ": " << n << '\n';
  }
  return 0;
}

int cmd_train_regressor(const RunConfig& c, const CommandOptions&, std::ostream& out) {
  const auto train = load_records(c.paths.train, "paths.train");
  require_file(c.paths.localizations, "paths.localizations");
  const PredictionSet preds = to_predictions(read_localizations(c.paths.localizations));
  const auto provider = load_provider(train);

  std::vector<std::string> fields{kObjectPart};
  if (c.regression.apply_to_parts) {
    for (const auto& p : part_names(c, train)) fields.push_back(p);
  }
  const std::string object_model = output_path(c, "regressor.model").string();
  for (const auto& field : fields) {
    const auto pairs = regression_pairs(train, preds, *provider, field, c.regression.class_agnostic);
    if (pairs.empty()) fail(ErrorCode::EmptyInput, "no regression pairs for '" + field + "'");
    const RegressorModel model = fit_regressor(pairs, c.regression.lambda, c.regression.convention,
                                               c.regression.bias_feature);
    const std::string path = field == kObjectPart ? object_model : part_model_path(object_model, field);
    write_regressor(fs::path(path), model);
    out << "fitted " << field << " regressor on " << pairs.size() << " pairs, "
        << model.weights.size() << " class model(s) -> " << path << '\n';
  }
  return 0;
}

int cmd_refine(const RunConfig& c, const CommandOptions&, std::ostream& out) {
  const auto test = load_records(c.paths.test, "paths.test");
  require_file(c.paths.localizations, "paths.localizations");
  require_file(c.paths.regressor, "paths.regressor");
  auto results = read_localizations(c.paths.localizations);
  const auto provider = load_provider(test);

  std::map<std::string, RegressorModel> models;
  models[kObjectPart] = read_regressor(fs::path(c.paths.regressor));
  if (c.regression.apply_to_parts) {
    for (const auto& p : part_names(c, test)) {
      const std::string path = part_model_path(c.paths.regressor, p);
      require_file(path, "part regressor");
      models[p] = read_regressor(fs::path(path));
    }
  }
  // Class-specific regressors need a class at test time: predicted labels when
  // given, otherwise the manifest's labels.
  std::map<std::string, std::string> labels;
  if (!c.paths.predictions.empty()) {
    require_file(c.paths.predictions, "paths.predictions");
    labels = read_class_predictions(c.paths.predictions);
  } else {
    for (const auto& r : test) {
      if (r.class_label) labels[r.id] = *r.class_label;
    }
  }
  std::map<std::string, const AnnotatedImage*> by_id;
  for (const auto& r : test) by_id[r.id] = &r;

  std::vector<std::string> errors(results.size());
  parallel_for(results.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& loc = results[i];
      try {
        auto rec = by_id.find(loc.id);
        if (rec == by_id.end()) fail(ErrorCode::UnknownImage, "localized image not in the test manifest");
        const AnnotatedImage& r = *rec->second;
        auto lab = labels.find(loc.id);
        const std::string label = lab == labels.end() ? std::string() : lab->second;
        auto refine_one = [&](const std::string& field, Localization& target) {
          auto feature = region_feature(*provider, r.id, r.size, field, target.box);
          if (!feature) fail(ErrorCode::MissingFeature, "no '" + field + "' feature");
          try {
            target.box = clamp_box(refine_box(models.at(field), label, target.box, *feature), r.size);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::UnknownClass || !c.regression.fallback) throw;
          }
        };
        if (loc.object) refine_one(kObjectPart, *loc.object);
        if (c.regression.apply_to_parts) {
          for (auto& [name, part] : loc.parts) {
            if (part && models.contains(name)) refine_one(name, *part);
          }
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  });

  std::vector<json> error_lines;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!errors[i].empty()) error_lines.push_back({{"id", results[i].id}, {"error", errors[i]}});
  }
  write_localizations(output_path(c, "refined.jsonl"), results);
  write_jsonl(output_path(c, "refine_errors.jsonl"), error_lines);
  out << "refined " << results.size() - error_lines.size() << " of " << results.size()
      << " localizations (" << error_lines.size() << " failed)\n";
  return 0;
}

int cmd_train_classifier(const RunConfig& c, const CommandOptions&, std::ostream& out) {
  const auto train = load_records(c.paths.train, "paths.train");
  const auto provider = load_provider(train);
  RegionLayout layout;
  for (const auto& region : c.svm.regions) layout.push_back({region, provider->dim()});
  const PredictionSet boxes = ground_truth_predictions(train, c.svm.regions);

  std::vector<LabeledFeature> examples(train.size());
  parallel_for(train.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& r = train[i];
      if (!r.class_label) fail(ErrorCode::Validation, "training record '" + r.id + "' has no class");
      examples[i] = {region_layout_feature(*provider, r.id, r.size, boxes.at(r.id), layout),
                     *r.class_label};
    }
  });

  SvmTrainingLog log;
  const ClassifierModel model =
      train_svm(examples, {c.svm.c, c.svm.epochs, c.seed}, layout, &log);
  write_classifier(output_path(c, "classifier.model"), model);
  json objective = json::object();
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    objective[model.classes[k]] = {{"objective", log.objective[k]},
                                      {"kept_objective", log.kept_objective[k]},
                                      {"kept_epoch", log.kept_epoch[k]}};
  }
  write_text(output_path(c, "svm_log.json"), objective.dump(2) + "\n");

  std::size_t correct = 0;
  for (const auto& ex : examples) correct += predict(model, ex.feature).label == ex.label ? 1 : 0;
  out << "trained " << model.classes.size() << " one-vs-all classifiers on " << examples.size()
      << " examples (dim " << model.dim() << "), training accuracy "
      << 100.0 * static_cast<double>(correct) / static_cast<double>(examples.size()) << "%\n";
  return 0;
}

int cmd_recognize(const RunConfig& c, const CommandOptions& o, std::ostream& out) {
  const auto test = load_records(c.paths.test, "paths.test");
  require_file(c.paths.classifier, "paths.classifier");
  const ClassifierModel model = read_classifier(fs::path(c.paths.classifier));
  const auto provider = load_provider(test);

  std::vector<std::string> regions;
  for (const auto& r : model.layout) regions.push_back(r.name);
  PredictionSet boxes;
  if (o.oracle_boxes) {
    boxes = ground_truth_predictions(test, regions);
  } else if (!c.paths.localizations.empty()) {
    require_file(c.paths.localizations, "paths.localizations");
    boxes = to_predictions(read_localizations(c.paths.localizations));
  }

  std::vector<ClassPrediction> predictions(test.size());
  parallel_for(test.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& r = test[i];
      auto it = boxes.find(r.id);
      const PartPredictions none;
      const Prediction p = predict(
          model, region_layout_feature(*provider, r.id, r.size, it == boxes.end() ? none : it->second,
                                       model.layout));
      ClassPrediction cp{r.id, p.label, {}};
      std::vector<std::size_t> order(p.scores.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return p.scores[a] > p.scores[b]; });
      for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k) {
        cp.top.emplace_back(model.classes[order[k]], p.scores[order[k]]);
      }
      predictions[i] = std::move(cp);
    }
  });
  write_class_predictions(output_path(c, "predictions.jsonl"), predictions);

  out << "recognized " << predictions.size() << " images";
  const bool labeled =
      std::all_of(test.begin(), test.end(), [](const auto& r) { return r.class_label.has_value(); });
  if (labeled) {
    std::map<std::string, std::string> labels;
    for (const auto& p : predictions) labels[p.id] = p.label;
    out << ", accuracy " << accuracy(labels, test) << "%";
  }
  out << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& c, const CommandOptions& o, std::ostream& out) {
  const auto truth = load_records(c.paths.test, "paths.test");
  const auto& thresholds = c.evaluation.thresholds;
  const PcpOptions options = pcp_options(c);
  const bool structured = c.format == ReportFormat::Structured;
  std::vector<std::string> parts{kObjectPart};
  for (const auto& p : part_names(c, truth)) parts.push_back(p);

  std::string text;
  json doc = json::object();
  std::vector<ReportCheck> checks;
  auto add_checks = [&](const PcpReport& report, const std::string& label) {
    for (auto check : check_report(report, truth)) {
      check.name = label + ": " + check.name;
      checks.push_back(std::move(check));
    }
  };
  auto section = [&](const std::string& key, const std::string& title, const std::string& body) {
    if (structured) {
      doc[key] = json::parse(body);
    } else {
      text += title + "\n" + body + "\n";
    }
  };
  auto load_pcp = [&](const std::string& path, const std::string& field) {
    require_file(path, field);
    return pcp(to_predictions(read_localizations(path)), truth, thresholds, parts, options);
  };

  std::optional<PcpReport> unknown, given;
  if (!c.paths.localizations.empty()) {
    unknown = load_pcp(c.paths.localizations, "paths.localizations");
    add_checks(*unknown, "localizations");
    section("pcp", "Localization PCP (%)",
            render_pcp_sweep({{"Transfer", *unknown}}, parts, c.format));
  }
  if (!c.paths.oracle_localizations.empty()) {
    given = load_pcp(c.paths.oracle_localizations, "paths.oracle_localizations");
    add_checks(*given, "oracle localizations");
  }
  if (given || unknown) {
    std::vector<std::string> part_only(parts.begin() + 1, parts.end());
    if (!part_only.empty()) {
      section("oracle", "Part PCP (%) with the object box given / unknown",
              render_oracle_table(given, unknown, part_only, c.format));
    }
  }
  if (!o.sweep.empty()) {
    std::vector<PcpRow> rows;
    for (const auto& entry : o.sweep) {
      const auto [label, path] = split_labeled(entry, "--sweep");
      rows.push_back({label, load_pcp(path, "--sweep " + label)});
      add_checks(rows.back().report, label);
    }
    section("sweep", "PCP (%) by configuration", render_pcp_sweep(rows, parts, c.format));
  }
  std::vector<AccuracyRow> acc;
  for (const auto& entry : o.accuracy) {
    const auto [label, path] = split_labeled(entry, "--accuracy");
    require_file(path, "--accuracy " + label);
    acc.push_back({label, accuracy(read_class_predictions(path), truth)});
  }
  if (!c.paths.predictions.empty()) {
    require_file(c.paths.predictions, "paths.predictions");
    acc.push_back({"Predicted", accuracy(read_class_predictions(c.paths.predictions), truth)});
  }
  if (!acc.empty()) section("accuracy", "Recognition accuracy", render_accuracy_table(acc, c.format));
  if (!checks.empty()) section("checks", "Checks", render_checks(checks, c.format));

  const std::string report = structured ? doc.dump(2) + "\n" : text;
  write_text(output_path(c, structured ? "report.json" : "report.txt"), report);
  out << report;
  const bool ok = std::all_of(checks.begin(), checks.end(), [](const auto& ch) { return ch.passed; });
  return ok ? 0 : 3;
}

int cmd_synth_gen(const RunConfig& c, const CommandOptions& o, std::ostream& out) {
  SynthConfig cfg = o.synth;
  cfg.seed = c.seed;
  const SynthWorld world = generate(cfg);
  write_world(world, c.paths.output_dir);
  out << "generated " << cfg.n_train << " training and " << cfg.n_test << " test images ("
      << (cfg.raster ? "raster" : "vector") << ") in " << c.paths.output_dir << '\n';
  return 0;
}

}  // namespace pt::cli
