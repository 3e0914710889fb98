// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "parttransfer/error.hpp"
#include "parttransfer/evaluation.hpp"
#include "parttransfer/geometry.hpp"
#include "parttransfer/index.hpp"
#include "parttransfer/parallel.hpp"
#include "parttransfer/pipeline.hpp"
#include "parttransfer/regression.hpp"
#include "parttransfer/report.hpp"
#include "parttransfer/synthetic.hpp"
#include "parttransfer/transfer.hpp"
#include "test_support.hpp"

namespace {

using namespace pt;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << v;
  return s.str();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------- C1

Outcome geometry_properties() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> count(2, 6);
  constexpr int kCases = 10000;
  constexpr double kTol = 1e-9;
  int failures = 0;
  for (int i = 0; i < kCases; ++i) {
    const BoundingBox b = testing::random_box(rng);
    const ImageSize from = testing::random_size(rng), to = testing::random_size(rng);
    const BoundingBox back = map_box(map_box(b, from, to), to, from);
    const double scale = std::max({1.0, std::abs(b.x), std::abs(b.y), b.w, b.h});
    if (std::abs(back.x - b.x) > kTol * scale || std::abs(back.y - b.y) > kTol * scale ||
        std::abs(back.w - b.w) > kTol * scale || std::abs(back.h - b.h) > kTol * scale) {
      ++failures;
    }
  }
  for (int i = 0; i < kCases; ++i) {
    std::vector<BoundingBox> boxes(static_cast<std::size_t>(count(rng)));
    for (auto& b : boxes) b = testing::random_box(rng);
    const BoundingBox u = fuse_boxes(boxes, FusionMode::Union);
    for (const auto& b : boxes) failures += contains(u, b, kTol * 100) ? 0 : 1;
    // Hulling with a common square guarantees the inputs overlap.
    for (auto& b : boxes) b = hull(b, {0, 0, 1, 1});
    const BoundingBox in = fuse_boxes(boxes, FusionMode::Intersection);
    for (const auto& b : boxes) failures += contains(b, in, kTol * 100) ? 0 : 1;
    auto shuffled = boxes;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto mode : {FusionMode::Union, FusionMode::Average, FusionMode::Intersection}) {
      const BoundingBox a = fuse_boxes(boxes, mode), c = fuse_boxes(shuffled, mode);
      if (std::abs(a.x - c.x) > kTol * 100 || std::abs(a.y - c.y) > kTol * 100 ||
          std::abs(a.w - c.w) > kTol * 100 || std::abs(a.h - c.h) > kTol * 100) {
        ++failures;
      }
    }
  }
  for (int i = 0; i < kCases; ++i) {
    const BoundingBox a = testing::random_box(rng), b = testing::random_box(rng);
    const double ab = iou(a, b);
    if (!(ab >= 0.0 && ab <= 1.0) || std::abs(ab - iou(b, a)) > kTol ||
        std::abs(iou(a, a) - 1.0) > kTol) {
      ++failures;
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 5.0,
          std::to_string(failures) + " violations over 5x" + std::to_string(kCases) + " cases in " +
              fmt(secs) + " s"};
}

// ---------------------------------------------------------------- C2

// Integer-valued features keep dot products exact, so ties are genuine.
Outcome knn_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> n_dist(1, 1000), d_dist(1, 256);
  std::uniform_int_distribution<int> v(-3, 3);
  int mismatches = 0, cases = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = n_dist(rng), d = d_dist(rng);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(d);
      if (i > 0 && rng() % 4 == 0) {
        row = rows[rng() % i];
      } else {
        for (auto& x : row) x = v(rng);
        row[rng() % d] = 4;
      }
      rows.push_back(std::move(row));
    }
    std::vector<double> q(d);
    for (auto& x : q) x = v(rng);
    q[0] = 5;
    FeatureTable table(d);
    for (const auto& r : rows) table.append(FeatureVector(r));
    const std::size_t m = 1 + rng() % 12;
    const Metric metric = trial % 2 == 0 ? Metric::Cosine : Metric::Euclidean;
    std::optional<std::size_t> exclude;
    if (trial % 3 == 0 && n > 1) exclude = rng() % n;

    std::vector<Neighbor> all;
    for (std::size_t i = 0; i < n; ++i) {
      if (exclude == i) continue;
      double dot = 0, qq = 0, rr = 0, sq = 0;
      for (std::size_t k = 0; k < d; ++k) {
        dot += q[k] * rows[i][k];
        qq += q[k] * q[k];
        rr += rows[i][k] * rows[i][k];
        sq += (q[k] - rows[i][k]) * (q[k] - rows[i][k]);
      }
      all.push_back({i, metric == Metric::Euclidean ? std::sqrt(sq) : cosine_distance(dot, qq, rr)});
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& a, const auto& b) { return a.distance < b.distance; });
    all.resize(std::min(m, all.size()));
    mismatches += table.knn(FeatureVector(q), m, metric, exclude) == all ? 0 : 1;
    ++cases;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of " + std::to_string(cases) +
                               " indexes differ from the full-sort oracle"};
}

// ---------------------------------------------------------------- C3

Outcome ridge_oracle() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> rows_d(2, 80), cols_d(1, 40);
  std::uniform_real_distribution<double> lam_d(-3, 1);
  std::normal_distribution<double> n01(0, 1);
  double worst_rel = 0, worst_grad = 0;
  for (int p = 0; p < 100; ++p) {
    const std::size_t n = rows_d(rng), d = cols_d(rng);
    const double lambda = std::pow(10.0, lam_d(rng));
    std::vector<double> x(n * d), y(n);
    for (auto& v : x) v = n01(rng);
    for (auto& v : y) v = n01(rng);
    const auto w = solve_ridge(x, n, d, {y}, lambda).front();

    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd Y(n);
    for (std::size_t i = 0; i < n; ++i) {
      Y(i) = y[i];
      for (std::size_t j = 0; j < d; ++j) X(i, j) = x[i * d + j];
    }
    const Eigen::MatrixXd A = X.transpose() * X + lambda * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd ref = A.fullPivLu().solve(X.transpose() * Y);
    double diff = 0;
    for (std::size_t j = 0; j < d; ++j) diff += (w[j] - ref(j)) * (w[j] - ref(j));
    worst_rel = std::max(worst_rel, std::sqrt(diff) / std::max(ref.norm(), 1e-300));

    // Central differences of the objective vanish at the minimizer.
    const double h = 1e-5;
    for (std::size_t j = 0; j < d; ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double g = (ridge_objective(x, n, d, y, wp, lambda) - ridge_objective(x, n, d, y, wm, lambda)) /
                       (2 * h);
      worst_grad = std::max(worst_grad, std::abs(g));
    }
  }
  return {worst_rel <= 1e-8 && worst_grad <= 1e-4,
          "100 problems, max relative error " + sci(worst_rel) + ", max |gradient| " +
              sci(worst_grad)};
}

// ---------------------------------------------------------------- C4

Outcome encode_decode() {
  std::mt19937_64 rng(4);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const BoundingBox t = testing::random_box(rng), g = testing::random_box(rng);
    const BoundingBox back = decode_box(t, encode_targets(t, g));
    const double scale = std::max({1.0, std::abs(g.x), std::abs(g.y), g.w, g.h});
    worst = std::max({worst, std::abs(back.x - g.x) / scale, std::abs(back.y - g.y) / scale,
                      std::abs(back.w - g.w) / scale, std::abs(back.h - g.h) / scale});
  }
  return {worst <= 1e-9, "10000 cases, max scaled error " + sci(worst)};
}

// ---------------------------------------------------------------- C5

Outcome noiseless_fixed_point() {
  SynthConfig sc;
  sc.box_jitter = 0.0;
  sc.feature_noise = 0.0;
  sc.n_test = 200;
  const SynthWorld w = generate(sc);
  const auto provider = make_provider(w);
  const auto index = TrainingIndex::build(w.train.records, *provider);
  const TransferConfig cfg;
  const auto model = TransferModel::prepare(index, *provider, cfg);
  const auto results = localize_batch(w.test.records, model, *provider, cfg, {});
  const auto preds = to_predictions(results);
  std::size_t exact = 0;
  for (const auto& r : w.test.records) {
    const auto& b = preds.at(r.id).at(kObjectPart);
    if (b && std::abs(iou(*b, *r.object_box) - 1.0) <= 1e-9) ++exact;
  }
  return {exact == w.test.records.size(),
          std::to_string(exact) + " of " + std::to_string(w.test.records.size()) +
              " test images at IoU 1"};
}

// ------------------------------------------------- shared raster world (C6 to C9, C11)

struct RasterRuns {
  SynthWorld world;
  std::unique_ptr<FeatureProvider> provider;
  std::unique_ptr<TrainingIndex> index;
  std::vector<std::string> parts;
  double c6_seconds = 0;
  std::vector<ImageLocalization> m2_union;
  std::map<std::string, std::vector<ImageLocalization>> fusion;  // M = 2, object only
  std::map<std::size_t, std::vector<ImageLocalization>> by_m;    // union, with parts
};

std::vector<ImageLocalization> run_transfer(RasterRuns& rr, const TransferConfig& cfg,
                                            const std::vector<AnnotatedImage>& queries,
                                            const std::vector<std::string>& parts,
                                            bool leave_one_out = false) {
  const auto model = TransferModel::prepare(*rr.index, *rr.provider, cfg, parts);
  LocalizeOptions lo;
  lo.parts = parts;
  lo.leave_one_out = leave_one_out;
  return localize_batch(queries, model, *rr.provider, cfg, lo);
}

RasterRuns& raster_runs() {
  static RasterRuns rr = [] {
    RasterRuns r;
    const auto t0 = Clock::now();
    SynthConfig sc;
    sc.raster = true;
    r.world = generate(sc);
    r.provider = make_provider(r.world);
    r.index = std::make_unique<TrainingIndex>(TrainingIndex::build(r.world.train.records, *r.provider));
    r.parts = annotated_parts(r.world.train.records);
    TransferConfig cfg;
    cfg.neighbors = 2;
    r.m2_union = run_transfer(r, cfg, r.world.test.records, {});
    r.c6_seconds = seconds_since(t0);
    return r;
  }();
  return rr;
}

Outcome iterative_gain() {
  auto& rr = raster_runs();
  const auto& truth = rr.world.test.records;
  const double r1 = mean_iou(predictions_at_round(rr.m2_union, 1), truth, kObjectPart);
  const double r3 = mean_iou(predictions_at_round(rr.m2_union, 3), truth, kObjectPart);
  return {truth.size() >= 200 && r3 >= r1 + 0.05 && rr.c6_seconds < 120.0,
          std::to_string(truth.size()) + " test images, mean IoU round 1 " + fmt(r1) +
              ", round 3 " + fmt(r3) + ", " + fmt(rr.c6_seconds, 1) + " s single-threaded"};
}

std::vector<PcpReport> g_reports;  // collected for C11

Outcome fusion_modes() {
  auto& rr = raster_runs();
  const std::vector<double> ts{0.5, 0.4, 0.3};
  std::string detail = "object PCP@0.5/0.4/0.3:";
  std::map<FusionMode, double> at03;
  for (auto mode : {FusionMode::Union, FusionMode::Average, FusionMode::Intersection}) {
    TransferConfig cfg;
    cfg.fusion = mode;
    const auto& res = mode == FusionMode::Union ? rr.m2_union
                                                : run_transfer(rr, cfg, rr.world.test.records, {});
    // A failed intersection is a miss, not a skipped sample.
    const auto rep = pcp(to_predictions(res), rr.world.test.records, ts, {kObjectPart},
                         {.absent_as_miss = true});
    g_reports.push_back(rep);
    const auto& p = rep.find(kObjectPart)->percent;
    at03[mode] = p[2];
    detail += " " + std::string(to_string(mode)) + " " + fmt(p[0], 1) + "/" + fmt(p[1], 1) + "/" +
              fmt(p[2], 1);
  }
  return {at03[FusionMode::Union] >= at03[FusionMode::Intersection], detail};
}

Outcome neighbour_count() {
  auto& rr = raster_runs();
  std::map<std::size_t, double> part_pcp;
  std::string detail = "mean part PCP@0.5 (";
  for (std::size_t i = 0; i < rr.parts.size(); ++i) detail += (i ? "," : "") + rr.parts[i];
  detail += "):";
  for (std::size_t m : {1u, 2u, 3u, 4u}) {
    TransferConfig cfg;
    cfg.neighbors = m;
    rr.by_m[m] = run_transfer(rr, cfg, rr.world.test.records, rr.parts);
    const auto rep = pcp(to_predictions(rr.by_m[m]), rr.world.test.records, {0.5, 0.4, 0.3});
    g_reports.push_back(rep);
    double sum = 0;
    for (const auto& p : rr.parts) sum += rep.find(p)->percent[0];
    part_pcp[m] = sum / static_cast<double>(rr.parts.size());
    detail += " M=" + std::to_string(m) + " " + fmt(part_pcp[m], 1);
  }
  return {std::max(part_pcp[2], part_pcp[3]) > part_pcp[1], detail};
}

// Mean displacement of the two box corners.
double corner_error(const BoundingBox& a, const BoundingBox& b) {
  return 0.5 * (std::hypot(a.x - b.x, a.y - b.y) +
                std::hypot(a.right() - b.right(), a.bottom() - b.bottom()));
}

Outcome regression_gain() {
  auto& rr = raster_runs();
  const TransferConfig cfg;
  const auto train_loc = run_transfer(rr, cfg, rr.world.train.records, {}, true);
  const auto pairs =
      regression_pairs(rr.world.train.records, to_predictions(train_loc), *rr.provider, kObjectPart, false);
  const auto model = fit_regressor(pairs, 1.0, TargetConvention::SizeNormalized, true);
  const auto test_preds = to_predictions(rr.m2_union);
  double before = 0, after = 0;
  std::size_t n = 0;
  for (const auto& r : rr.world.test.records) {
    const auto& b = test_preds.at(r.id).at(kObjectPart);
    if (!b) continue;
    const auto f = region_feature(*rr.provider, r.id, r.size, kObjectPart, *b);
    if (!f) continue;
    BoundingBox refined = refine_box(model, *r.class_label, *b, *f);
    try {
      refined = clamp_box(refined, r.size);
    } catch (const Error&) {
      // Entirely outside the image: scored as regressed.
    }
    before += corner_error(*b, *r.object_box);
    after += corner_error(refined, *r.object_box);
    ++n;
  }
  const double reduction = 100.0 * (1.0 - after / before);
  return {n > 0 && reduction >= 20.0,
          "mean corner error " + fmt(before / n, 2) + " -> " + fmt(after / n, 2) + " px (" +
              fmt(reduction, 1) + "% lower) over " + std::to_string(n) + " images"};
}

// ---------------------------------------------------------------- C10

Outcome region_accuracy() {
  SynthConfig sc;
  sc.raster = true;
  sc.clutter = 6;
  sc.object_scale_min = 0.25;
  sc.object_scale_max = 0.4;
  const SynthWorld w = generate(sc);
  const auto provider = make_provider(w);
  const auto index = TrainingIndex::build(w.train.records, *provider);
  const TransferConfig cfg;
  const auto model = TransferModel::prepare(index, *provider, cfg);
  const auto located = to_predictions(localize_batch(w.test.records, model, *provider, cfg, {}));

  std::map<std::string, double> acc;
  for (const std::string region : {"full", "object"}) {
    const RegionLayout layout{{region, provider->dim()}};
    const auto gt = ground_truth_predictions(w.train.records, {region});
    std::vector<LabeledFeature> examples;
    for (const auto& r : w.train.records) {
      examples.push_back(
          {region_layout_feature(*provider, r.id, r.size, gt.at(r.id), layout), *r.class_label});
    }
    const auto cls = train_svm(examples, {}, layout);
    std::map<std::string, std::string> predicted;
    for (const auto& r : w.test.records) {
      predicted[r.id] =
          predict(cls, region_layout_feature(*provider, r.id, r.size, located.at(r.id), layout)).label;
    }
    acc[region] = accuracy(predicted, w.test.records);
  }
  return {acc["object"] >= acc["full"] + 10.0,
          "accuracy entire image " + fmt(acc["full"], 1) + "%, localized object " +
              fmt(acc["object"], 1) + "%"};
}

// ---------------------------------------------------------------- C11

Outcome report_checks() {
  auto& rr = raster_runs();
  const auto& truth = rr.world.test.records;
  std::vector<std::string> all_parts{kObjectPart};
  all_parts.insert(all_parts.end(), rr.parts.begin(), rr.parts.end());
  const auto self = pcp(ground_truth_predictions(truth, all_parts), truth, {0.5, 0.7, 0.9, 1.0});
  bool self_ok = true;
  for (const auto& p : self.parts) {
    for (double v : p.percent) self_ok &= v == 100.0;
  }
  std::size_t checks = 0, failed = 0;
  auto reports = g_reports;
  reports.push_back(self);
  for (const auto& rep : reports) {
    bool monotone = true;
    for (const auto& p : rep.parts) {
      for (std::size_t k = 0; k < rep.thresholds.size(); ++k) {
        for (std::size_t j = 0; j < rep.thresholds.size(); ++j) {
          if (rep.thresholds[j] > rep.thresholds[k] && p.percent[j] > p.percent[k]) monotone = false;
        }
      }
    }
    failed += monotone ? 0 : 1;
    for (const auto& c : check_report(rep, truth)) {
      ++checks;
      failed += c.passed ? 0 : 1;
    }
  }
  return {self_ok && failed == 0 && !g_reports.empty(),
          std::to_string(reports.size()) + " reports, " + std::to_string(checks) +
              " built-in checks, " + std::to_string(failed) + " failures; ground truth self-score " +
              (self_ok ? "100%" : "below 100%")};
}

// ---------------------------------------------------------------- C12

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_end_to_end() {
  testing::TempDir dir;
  const std::string root = dir.path().string();
  const std::string tool = PT_TOOL_PATH;
  const std::string world = root + "/world";
  const std::string train = world + "/train.jsonl", test = world + "/test.jsonl";
  std::string failed_step;
  auto step = [&](const std::string& name, const std::string& args) {
    if (!failed_step.empty()) return;
    const std::string cmd = "\"" + tool + "\" --threads 2 --output-dir \"" + root + "/" + name +
                            "\" " + args + " > \"" + root + "/" + name + ".log\" 2>&1";
    if (std::system(cmd.c_str()) != 0) failed_step = name;
  };
  step("world", "synth-gen --raster --n-train 150 --n-test 60");
  step("index", "build-index --train " + train);
  step("loc", "localize --parts --train " + train + " --test " + test);
  step("loc_m1", "localize --parts --M 1 --train " + train + " --test " + test);
  step("oracle", "localize --parts --seed-oracle-object --train " + train + " --test " + test);
  step("loo", "localize --leave-one-out --train " + train);
  step("reg", "train-regressor --train " + train + " --localizations " + root +
                  "/loo/localizations.jsonl --bias-feature");
  step("refined", "refine --test " + test + " --localizations " + root +
                      "/loc/localizations.jsonl --regressor " + root + "/reg/regressor.model");
  step("cls_full", "train-classifier --regions full --train " + train);
  step("cls_all", "train-classifier --regions full,object,head,body --train " + train);
  step("rec_full", "recognize --test " + test + " --classifier " + root + "/cls_full/classifier.model");
  step("rec_all", "recognize --test " + test + " --classifier " + root +
                      "/cls_all/classifier.model --localizations " + root + "/refined/refined.jsonl");
  step("eval", "evaluate --test " + test + " --localizations " + root +
                   "/loc/localizations.jsonl --oracle-localizations " + root +
                   "/oracle/localizations.jsonl --sweep M1=" + root +
                   "/loc_m1/localizations.jsonl --sweep M2=" + root +
                   "/loc/localizations.jsonl --accuracy full=" + root +
                   "/rec_full/predictions.jsonl --accuracy all=" + root + "/rec_all/predictions.jsonl");
  if (!failed_step.empty()) {
    return {false, "step " + failed_step + " failed: " + slurp(root + "/" + failed_step + ".log")};
  }
  const std::string report = slurp(root + "/eval/report.txt");
  const bool tables = report.find("PCP (%) by configuration") != std::string::npos &&
                      report.find("Oracle box given") != std::string::npos &&
                      report.find("Input image region") != std::string::npos;
  return {tables, tables ? "13 commands succeeded; report has the configuration sweep, oracle-box "
                           "and accuracy tables"
                         : "report is missing a table:\n" + report};
}

}  // namespace

int main() {
  set_thread_count(1);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1 geometry properties", geometry_properties},
      {"C2 kNN matches brute force", knn_oracle},
      {"C3 ridge matches dense solve", ridge_oracle},
      {"C4 encode/decode round trip", encode_decode},
      {"C5 noiseless fixed point", noiseless_fixed_point},
      {"C6 iteration improves IoU", iterative_gain},
      {"C7 union vs intersection", fusion_modes},
      {"C8 neighbour count", neighbour_count},
      {"C9 box regression", regression_gain},
      {"C10 object region accuracy", region_accuracy},
      {"C11 report sanity checks", report_checks},
      {"C12 command line pipeline", cli_end_to_end},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed\n";
  return failures == 0 ? 0 : 1;
}
