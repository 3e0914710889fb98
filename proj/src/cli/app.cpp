#include "parttransfer/cli/app.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>

#include <CLI11.hpp>

#include "parttransfer/cli/commands.hpp"
#include "parttransfer/cli/run_config.hpp"
#include "parttransfer/error.hpp"
#include "parttransfer/parallel.hpp"

namespace pt::cli {

using nlohmann::json;

namespace {

// Flags that land in the run config are recorded as JSON patches so they can
// be layered over the config file.
class Overrides {
 public:
  template <class T>
  CLI::Option* option(CLI::App* app, const std::string& flag, const std::string& pointer,
                      const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    patches_.push_back([opt, value, pointer](json& j) {
      if (opt->count() > 0) j[json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& flag, const std::string& pointer,
                    const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, help);
    patches_.push_back([opt, pointer](json& j) {
      if (opt->count() > 0) j[json::json_pointer(pointer)] = true;
    });
    return opt;
  }

  json patch() const {
    json j = json::object();
    for (const auto& p : patches_) p(j);
    return j;
  }

 private:
  std::vector<std::function<void(json&)>> patches_;
};

using Command = int (*)(const RunConfig&, const CommandOptions&, std::ostream&);

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative object and part localization by box transfer, box regression and "
               "region-feature recognition."};
  app.name("parttransfer");
  app.require_subcommand(1);
  app.fallthrough();

  Overrides ov;
  CommandOptions o;
  std::string config_path;
  app.add_option("--config", config_path, "JSON run config; flags override it")
      ->check(CLI::ExistingFile);
  ov.option<unsigned>(&app, "--threads", "/threads", "Worker threads (0 = hardware)");
  ov.option<std::uint64_t>(&app, "--seed", "/seed", "Seed for training and generation");
  ov.option<std::string>(&app, "--output-dir", "/paths/output_dir", "Directory for outputs");
  ov.option<std::string>(&app, "--format", "/format", "Report format")
      ->check(CLI::IsMember({"text", "structured"}));

  auto transfer_flags = [&](CLI::App* cmd) {
    ov.option<std::size_t>(cmd, "--M,--neighbors", "/transfer/M", "Neighbours per transfer");
    ov.option<std::string>(cmd, "--fusion", "/transfer/fusion", "Box fusion")
        ->check(CLI::IsMember({"union", "average", "intersection"}));
    ov.option<int>(cmd, "--max-iters", "/transfer/max_iters", "Maximum transfer rounds");
    ov.option<double>(cmd, "--stability-iou", "/transfer/stability_iou",
                      "Stop when consecutive boxes reach this IoU");
    ov.option<double>(cmd, "--score-threshold", "/transfer/score_threshold",
                      "Stop when the raw classifier's best score exceeds this");
    ov.option<std::string>(cmd, "--metric", "/transfer/metric", "Retrieval distance")
        ->check(CLI::IsMember({"cosine", "euclidean"}));
  };
  auto parts_flag = [&](CLI::App* cmd) {
    ov.option<std::vector<std::string>>(cmd, "--part-names", "/parts",
                                        "Parts to use (default: all annotated)")
        ->delimiter(',');
  };

  std::vector<std::pair<CLI::App*, Command>> commands;

  auto* build = app.add_subcommand("build-index", "Validate a manifest and its features");
  ov.option<std::string>(build, "--train", "/paths/train", "Training manifest");
  ov.option<std::string>(build, "--metric", "/transfer/metric", "Retrieval distance")
      ->check(CLI::IsMember({"cosine", "euclidean"}));
  commands.emplace_back(build, &cmd_build_index);

  auto* localize = app.add_subcommand("localize", "Localize objects (and parts) in test images");
  ov.option<std::string>(localize, "--train", "/paths/train", "Training manifest");
  ov.option<std::string>(localize, "--test", "/paths/test", "Test manifest");
  ov.option<std::string>(localize, "--raw-classifier", "/paths/raw_classifier",
                         "Whole-image classifier for score-based stopping");
  transfer_flags(localize);
  parts_flag(localize);
  localize->add_flag("--parts", o.localize_parts, "Also localize parts");
  localize->add_flag("--seed-oracle-object", o.seed_oracle_object,
                     "Use the ground-truth object box instead of localizing it");
  localize->add_flag("--leave-one-out", o.leave_one_out,
                     "Localize the training images, each excluding itself");
  localize->add_flag("--fail-fast", o.fail_fast, "Stop at the first failing image");
  localize->add_option("--only", o.only, "Restrict to these image ids")->delimiter(',');
  commands.emplace_back(localize, &cmd_localize);

  auto* train_reg = app.add_subcommand("train-regressor", "Fit box regressors");
  ov.option<std::string>(train_reg, "--train", "/paths/train", "Training manifest");
  ov.option<std::string>(train_reg, "--localizations", "/paths/localizations",
                         "Predicted boxes for the training images");
  ov.option<double>(train_reg, "--lambda", "/regression/lambda", "Ridge penalty");
  ov.option<std::string>(train_reg, "--convention", "/regression/convention", "Target convention")
      ->check(CLI::IsMember({"size-normalized", "literal"}));
  ov.flag(train_reg, "--apply-to-parts", "/regression/apply_to_parts", "Fit part regressors too");
  ov.flag(train_reg, "--bias-feature", "/regression/bias_feature", "Append a constant 1 feature");
  ov.flag(train_reg, "--class-agnostic", "/regression/class_agnostic", "One model for all classes");
  parts_flag(train_reg);
  commands.emplace_back(train_reg, &cmd_train_regressor);

  auto* refine = app.add_subcommand("refine", "Apply box regressors to localizations");
  ov.option<std::string>(refine, "--test", "/paths/test", "Test manifest");
  ov.option<std::string>(refine, "--localizations", "/paths/localizations", "Boxes to refine");
  ov.option<std::string>(refine, "--regressor", "/paths/regressor", "Object regressor model");
  ov.option<std::string>(refine, "--predictions", "/paths/predictions",
                         "Predicted classes selecting the regressor (default: manifest classes)");
  ov.flag(refine, "--fallback", "/regression/fallback", "Keep boxes of classes without a model");
  ov.flag(refine, "--apply-to-parts", "/regression/apply_to_parts", "Refine part boxes too");
  parts_flag(refine);
  commands.emplace_back(refine, &cmd_refine);

  auto* train_cls = app.add_subcommand("train-classifier", "Train one-vs-all linear SVMs");
  ov.option<std::string>(train_cls, "--train", "/paths/train", "Training manifest");
  ov.option<std::vector<std::string>>(train_cls, "--regions", "/svm/regions",
                                      "Concatenated regions, in order")
      ->delimiter(',');
  ov.option<double>(train_cls, "--C", "/svm/C", "SVM regularization");
  ov.option<int>(train_cls, "--epochs", "/svm/epochs", "Training epochs");
  commands.emplace_back(train_cls, &cmd_train_classifier);

  auto* recognize = app.add_subcommand("recognize", "Classify test images");
  ov.option<std::string>(recognize, "--test", "/paths/test", "Test manifest");
  ov.option<std::string>(recognize, "--classifier", "/paths/classifier", "Classifier model");
  ov.option<std::string>(recognize, "--localizations", "/paths/localizations",
                         "Boxes for the object and part regions");
  recognize->add_flag("--oracle-boxes", o.oracle_boxes, "Use ground-truth region boxes");
  commands.emplace_back(recognize, &cmd_recognize);

  auto* evaluate = app.add_subcommand("evaluate", "PCP and accuracy reports");
  ov.option<std::string>(evaluate, "--test", "/paths/test", "Ground-truth manifest");
  ov.option<std::string>(evaluate, "--localizations", "/paths/localizations",
                         "Localizations with the object box unknown");
  ov.option<std::string>(evaluate, "--oracle-localizations", "/paths/oracle_localizations",
                         "Localizations seeded with the ground-truth object box");
  ov.option<std::string>(evaluate, "--predictions", "/paths/predictions", "Class predictions");
  ov.option<std::vector<double>>(evaluate, "--thresholds", "/evaluation/thresholds",
                                 "IoU thresholds")
      ->delimiter(',');
  ov.flag(evaluate, "--strict", "/evaluation/strict", "Hit only when IoU > threshold");
  ov.flag(evaluate, "--absent-as-miss", "/evaluation/absent_as_miss",
          "Count absent predictions as misses");
  parts_flag(evaluate);
  evaluate->add_option("--sweep", o.sweep, "label=localizations rows of a PCP table");
  evaluate->add_option("--accuracy", o.accuracy, "label=predictions rows of an accuracy table");
  commands.emplace_back(evaluate, &cmd_evaluate);

  auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic world");
  synth->add_option("--n-train", o.synth.n_train, "Training images")->capture_default_str();
  synth->add_option("--n-test", o.synth.n_test, "Test images")->capture_default_str();
  synth->add_option("--clusters", o.synth.n_clusters, "Appearance clusters")->capture_default_str();
  synth->add_option("--classes", o.synth.n_classes, "Classes")->capture_default_str();
  synth->add_flag("--raster", o.synth.raster, "Emit images instead of feature files");
  synth->add_option("--jitter", o.synth.box_jitter, "Relative box jitter")->capture_default_str();
  synth->add_option("--noise", o.synth.feature_noise, "Feature or pixel noise")
      ->capture_default_str();
  synth->add_option("--width", o.synth.image_size.width, "Nominal image width")
      ->capture_default_str();
  synth->add_option("--height", o.synth.image_size.height, "Nominal image height")
      ->capture_default_str();
  synth->add_option("--size-variation", o.synth.size_variation, "Relative image size spread")
      ->capture_default_str();
  synth->add_option("--object-scale-min", o.synth.object_scale_min,
                    "Smallest object side relative to the image")
      ->capture_default_str();
  synth->add_option("--object-scale-max", o.synth.object_scale_max,
                    "Largest object side relative to the image")
      ->capture_default_str();
  synth->add_option("--clutter", o.synth.clutter, "Distractor patches per raster image")
      ->capture_default_str();
  commands.emplace_back(synth, &cmd_synth_gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    json merged = json::object();
    if (!config_path.empty()) merged = read_config_file(config_path);
    merged.merge_patch(ov.patch());
    const RunConfig config = run_config_from_json(merged);
    if (config.threads > 0) set_thread_count(config.threads);

    for (const auto& [cmd, fn] : commands) {
      if (!cmd->parsed()) continue;
      std::filesystem::create_directories(config.paths.output_dir);
      std::ofstream eff(std::filesystem::path(config.paths.output_dir) / "effective_config.json");
      eff << json{{"command", cmd->get_name()}, {"config", to_json(config)}}.dump(2) << '\n';
      if (!eff) fail(ErrorCode::Io, "cannot write the effective config");
      eff.close();
      return fn(config, o, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace pt::cli
