#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "parttransfer/error.hpp"
#include "parttransfer/evaluation.hpp"
#include "parttransfer/index.hpp"
#include "parttransfer/pipeline.hpp"
#include "parttransfer/recognition.hpp"
#include "parttransfer/synthetic.hpp"
#include "parttransfer/transfer.hpp"

namespace {

using pt::AnnotatedImage;
using pt::BoundingBox;
using pt::BoxField;
using pt::FeatureVector;
using pt::GalleryEntry;
using pt::ImageSize;
using pt::TransferConfig;
using pt::TransferGallery;

void expect_box_near(const BoundingBox& a, const BoundingBox& b, double tol = 1e-9) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.w, b.w, tol);
  EXPECT_NEAR(a.h, b.h, tol);
}

TransferGallery gallery(const std::vector<std::vector<double>>& features,
                        std::vector<GalleryEntry> entries) {
  auto table = std::make_shared<pt::FeatureTable>(features.front().size());
  for (const auto& f : features) table->append(FeatureVector(f));
  return TransferGallery(table, std::move(entries), pt::Metric::Euclidean);
}

AnnotatedImage record(const std::string& id, ImageSize size, BoundingBox object,
                      std::vector<double> full, std::vector<double> object_feature) {
  AnnotatedImage r;
  r.id = id;
  r.size = size;
  r.class_label = "c";
  r.object_box = object;
  r.features["full"].inline_values = std::move(full);
  r.features["object"].inline_values = std::move(object_feature);
  return r;
}

TEST(TransferConfig, DefaultsAndValidation) {
  const TransferConfig cfg;
  EXPECT_EQ(cfg.neighbors, 2u);
  EXPECT_EQ(cfg.fusion, pt::FusionMode::Union);
  EXPECT_EQ(cfg.max_iters, 3);
  EXPECT_EQ(cfg.stability_iou, 0.9);
  TransferConfig bad;
  bad.neighbors = 0;
  EXPECT_THROW(bad.validate(), pt::Error);
  bad = {};
  bad.stability_iou = 1.5;
  EXPECT_THROW(bad.validate(), pt::Error);
  bad = {};
  bad.max_iters = 0;
  EXPECT_THROW(bad.validate(), pt::Error);
}

TEST(TransferStep, FullFrameNeighbourMapsToFullQueryFrame) {
  const auto g = gallery({{0, 0}}, {{"a", {640, 480}, BoundingBox{0, 0, 640, 480}, {}}});
  TransferConfig cfg;
  cfg.neighbors = 1;
  const auto r = pt::transfer_step(FeatureVector({0, 0}), {200, 100}, g, BoxField::object(), cfg);
  expect_box_near(r.box, {0, 0, 200, 100});
  EXPECT_EQ(r.fused, 1u);
}

TEST(TransferStep, UnionOfTwoNeighboursInUnitSquare) {
  // Boxes given in 10x10 frames so they read as 0.1, 0.15, ... in the unit square.
  const auto g = gallery({{0, 0}, {1, 0}},
                         {{"a", {10, 10}, BoundingBox{1, 1, 2, 2}, {}},
                          {"b", {10, 10}, BoundingBox{1.5, 1.5, 3, 3}, {}}});
  const TransferConfig cfg;
  const auto r = pt::transfer_step(FeatureVector({0, 0}), {100, 100}, g, BoxField::object(), cfg);
  expect_box_near(r.box, {10, 10, 35, 35});
  ASSERT_EQ(r.neighbors.size(), 2u);
  EXPECT_EQ(r.neighbors[0].id, "a");
}

TEST(TransferStep, NeighbourWithoutThePartIsSkipped) {
  const auto g = gallery({{0, 0}, {1, 0}},
                         {{"a", {10, 10}, BoundingBox{0, 0, 10, 10}, {{"head", BoundingBox{1, 1, 2, 2}}}},
                          {"b", {10, 10}, BoundingBox{0, 0, 10, 10}, {{"head", std::nullopt}}}});
  const TransferConfig cfg;
  const auto r =
      pt::transfer_step(FeatureVector({0, 0}), {100, 100}, g, BoxField::part("head"), cfg);
  expect_box_near(r.box, {10, 10, 20, 20});
  EXPECT_EQ(r.fused, 1u);
  EXPECT_EQ(r.neighbors.size(), 2u);

  try {
    pt::transfer_step(FeatureVector({0, 0}), {100, 100}, g, BoxField::part("tail"), cfg);
    FAIL();
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::ErrorCode::AnnotationUnavailable);
  }
}

TEST(TransferStep, ExclusionSkipsTheQueryItself) {
  const auto g = gallery({{0, 0}, {5, 5}},
                         {{"self", {10, 10}, BoundingBox{0, 0, 1, 1}, {}},
                          {"other", {10, 10}, BoundingBox{5, 5, 5, 5}, {}}});
  TransferConfig cfg;
  cfg.neighbors = 1;
  const auto r = pt::transfer_step(FeatureVector({0, 0}), {10, 10}, g, BoxField::object(), cfg,
                                   std::string("self"));
  EXPECT_EQ(r.neighbors.front().id, "other");
  expect_box_near(r.box, {5, 5, 5, 5});
}

struct Fixture {
  std::vector<AnnotatedImage> records;
  std::unique_ptr<pt::FeatureProvider> provider;
  std::unique_ptr<pt::TrainingIndex> index;

  explicit Fixture(std::vector<AnnotatedImage> rs) : records(std::move(rs)) {
    provider = pt::load_provider(records);
    index = std::make_unique<pt::TrainingIndex>(pt::TrainingIndex::build(records, *provider));
  }
};

TEST(IterativeLocalize, FullFrameTrainingBoxesAreAFixedPoint) {
  std::vector<AnnotatedImage> rs;
  for (int i = 0; i < 5; ++i) {
    const ImageSize s{100.0 + 10 * i, 80.0 + 5 * i};
    rs.push_back(record("t" + std::to_string(i), s, s.frame(), {1.0, 0.1 * i}, {0.1 * i, 1.0}));
  }
  rs.push_back(record("q", {300, 200}, {0, 0, 300, 200}, {1.0, 0.25}, {0.25, 1.0}));
  Fixture f(rs);
  const TransferConfig cfg;
  const auto model = pt::TransferModel::prepare(*f.index, *f.provider, cfg);
  const auto loc = pt::iterative_localize("q", {300, 200}, *f.provider, model.full, model.cropped,
                                          cfg, nullptr, std::string("q"));
  expect_box_near(loc.box, {0, 0, 300, 200});
  EXPECT_EQ(loc.trace.steps.size(), 2u);
  EXPECT_EQ(loc.trace.reason, pt::Termination::Stability);
}

TEST(IterativeLocalize, MaxItersOneStopsAfterOneRound) {
  std::vector<AnnotatedImage> rs;
  for (int i = 0; i < 4; ++i) {
    rs.push_back(record("t" + std::to_string(i), {100, 100}, {10.0 * i, 5, 30, 40},
                        {1.0, 0.3 * i}, {0.2 * i, 1.0}));
  }
  Fixture f(rs);
  TransferConfig cfg;
  cfg.max_iters = 1;
  const auto model = pt::TransferModel::prepare(*f.index, *f.provider, cfg);
  const auto loc = pt::iterative_localize("t1", {100, 100}, *f.provider, model.full, model.cropped,
                                          cfg, nullptr, std::string("t1"));
  EXPECT_EQ(loc.trace.steps.size(), 1u);
  EXPECT_EQ(loc.trace.reason, pt::Termination::MaxIters);
}

TEST(IterativeLocalize, StoredFeaturesAllowOneExtraRound) {
  std::vector<AnnotatedImage> rs;
  for (int i = 0; i < 4; ++i) {
    rs.push_back(record("t" + std::to_string(i), {100, 100}, {10.0 * i, 5, 30, 40},
                        {1.0, 0.3 * i}, {0.2 * i, 1.0}));
  }
  Fixture f(rs);
  TransferConfig cfg;
  cfg.max_iters = 5;
  cfg.stability_iou = 1.0;
  const auto model = pt::TransferModel::prepare(*f.index, *f.provider, cfg);
  const auto loc = pt::iterative_localize("t2", {100, 100}, *f.provider, model.full, model.cropped,
                                          cfg, nullptr, std::string("t2"));
  ASSERT_LE(loc.trace.steps.size(), 2u);
  if (loc.trace.steps.size() == 2) {
    EXPECT_TRUE(loc.trace.reason == pt::Termination::StageExhausted ||
                loc.trace.reason == pt::Termination::Stability);
  }
}

TEST(IterativeLocalize, ClassifierScoreStopsEarly) {
  std::vector<AnnotatedImage> rs;
  for (int i = 0; i < 4; ++i) {
    rs.push_back(record("t" + std::to_string(i), {100, 100}, {10.0 * i, 5, 30, 40},
                        {1.0, 0.3 * i}, {0.2 * i, 1.0}));
  }
  Fixture f(rs);
  pt::ClassifierModel raw;
  raw.classes = {"c"};
  raw.weights = {{0.0, 0.0}};
  raw.biases = {10.0};
  TransferConfig cfg;
  cfg.score_threshold = 5.0;
  const auto model = pt::TransferModel::prepare(*f.index, *f.provider, cfg);
  const auto loc = pt::iterative_localize("t0", {100, 100}, *f.provider, model.full, model.cropped,
                                          cfg, &raw, std::string("t0"));
  EXPECT_EQ(loc.trace.steps.size(), 1u);
  EXPECT_EQ(loc.trace.reason, pt::Termination::ClassifierScore);
}

TEST(RebuildCrops, AdjustmentContract) {
  // a <-> b and c <-> d are mutual nearest neighbours.
  std::vector<AnnotatedImage> rs{
      record("a", {100, 100}, {10, 10, 10, 10}, {1, 0}, {1, 0}),
      record("b", {100, 100}, {0, 0, 50, 50}, {1, 0.1}, {1, 0}),
      record("c", {100, 100}, {80, 80, 10, 10}, {0, 1}, {0, 1}),
      record("d", {100, 100}, {0, 0, 20, 20}, {0.1, 1}, {0, 1}),
  };
  Fixture f(rs);
  TransferConfig cfg;
  cfg.neighbors = 1;
  const auto set = pt::rebuild_training_crops(*f.index, *f.provider, cfg);
  // a's prediction already contains its object: unchanged.
  expect_box_near(set.predicted[0], {0, 0, 50, 50});
  expect_box_near(set.crops[0], set.predicted[0]);
  // c's prediction misses the object: grown to the hull.
  expect_box_near(set.predicted[2], {0, 0, 20, 20});
  expect_box_near(set.crops[2], {0, 0, 90, 90});
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_TRUE(pt::contains(set.crops[i], *rs[i].object_box, 1e-9));
  }
  ASSERT_TRUE(set.has_features());
  // Gallery entries are framed by the crops.
  EXPECT_EQ(set.gallery.entry(2).frame, (ImageSize{90, 90}));
  expect_box_near(*set.gallery.entry(2).object, {80, 80, 10, 10});
}

TEST(RebuildCrops, NeedsMorePlusOneRecords) {
  std::vector<AnnotatedImage> rs{record("a", {10, 10}, {1, 1, 2, 2}, {1, 0}, {1, 0}),
                                 record("b", {10, 10}, {1, 1, 2, 2}, {0, 1}, {0, 1})};
  Fixture f(rs);
  const TransferConfig cfg;  // M = 2
  EXPECT_THROW(pt::rebuild_training_crops(*f.index, *f.provider, cfg), pt::Error);
}

TEST(RebuildCrops, CropsContainTruthOnSyntheticWorlds) {
  for (bool raster : {false, true}) {
    pt::SynthConfig sc;
    sc.raster = raster;
    sc.n_train = 120;
    sc.n_test = 1;
    sc.seed = 3;
    const auto world = pt::generate(sc);
    const auto provider = pt::make_provider(world);
    const auto index = pt::TrainingIndex::build(world.train.records, *provider);
    const auto set = pt::rebuild_training_crops(index, *provider, TransferConfig{});
    for (std::size_t i = 0; i < index.size(); ++i) {
      ASSERT_TRUE(pt::contains(set.crops[i], *index.record(i).object_box, 1e-9));
      ASSERT_TRUE(pt::contains(index.record(i).size.frame(), set.crops[i]));
    }
  }
}

TEST(LocalizeParts, ConstantRelativePartIsReproduced) {
  // Every object sits at the same relative place, so leave-one-out
  // predictions equal the truth and crops equal the object boxes.
  std::vector<AnnotatedImage> rs;
  for (int i = 0; i < 6; ++i) {
    const ImageSize s{100.0 + 20 * i, 90.0 + 10 * i};
    const BoundingBox obj{0.2 * s.width, 0.25 * s.height, 0.6 * s.width, 0.5 * s.height};
    auto r = record("t" + std::to_string(i), s, obj, {1.0, 0.1 * i}, {0.1 * i, 1.0});
    r.parts["head"] = BoundingBox{obj.x + 0.1 * obj.w, obj.y + 0.2 * obj.h, 0.3 * obj.w, 0.4 * obj.h};
    r.parts["tail"] = std::nullopt;
    rs.push_back(std::move(r));
  }
  // The query sits at the same relative place too; it has no head, so it
  // never contributes a head box.
  rs.push_back(record("q", {400, 300}, {80, 75, 240, 150}, {1.0, 0.25}, {0.25, 1.0}));
  Fixture f(rs);
  const TransferConfig cfg;
  const auto model = pt::TransferModel::prepare(*f.index, *f.provider, cfg, {"head", "tail"});
  const BoundingBox object{80, 75, 240, 150};
  const auto parts = pt::localize_parts(object, "q", {400, 300}, *f.provider, model.cropped,
                                        {"head", "tail"}, cfg, std::string("q"));
  ASSERT_TRUE(parts.at("head").has_value());
  expect_box_near(parts.at("head")->box, {104, 105, 72, 60}, 1e-6);
  EXPECT_FALSE(parts.at("tail").has_value());
}

class SyntheticTransfer : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    pt::SynthConfig sc;
    sc.n_train = 150;
    sc.n_test = 40;
    sc.seed = 5;
    world_ = new pt::SynthWorld(pt::generate(sc));
    provider_ = pt::make_provider(*world_).release();
    index_ = new pt::TrainingIndex(pt::TrainingIndex::build(world_->train.records, *provider_));
  }
  static void TearDownTestSuite() {
    delete index_;
    delete provider_;
    delete world_;
  }
  static pt::SynthWorld* world_;
  static pt::FeatureProvider* provider_;
  static pt::TrainingIndex* index_;
};

pt::SynthWorld* SyntheticTransfer::world_ = nullptr;
pt::FeatureProvider* SyntheticTransfer::provider_ = nullptr;
pt::TrainingIndex* SyntheticTransfer::index_ = nullptr;

TEST_F(SyntheticTransfer, TraceIsConsistentWithItsTermination) {
  for (int max_iters : {1, 2, 3}) {
    TransferConfig cfg;
    cfg.max_iters = max_iters;
    const auto model = pt::TransferModel::prepare(*index_, *provider_, cfg);
    for (const auto& r : world_->test.records) {
      const auto loc = pt::iterative_localize(r.id, r.size, *provider_, model.full, model.cropped, cfg);
      const auto& steps = loc.trace.steps;
      ASSERT_FALSE(steps.empty());
      ASSERT_LE(static_cast<int>(steps.size()), max_iters);
      for (const auto& s : steps) ASSERT_TRUE(s.box.valid());
      if (loc.trace.reason == pt::Termination::Stability) {
        ASSERT_GE(steps.size(), 2u);
        ASSERT_GE(pt::iou(steps.back().box, steps[steps.size() - 2].box), cfg.stability_iou);
      }
      if (loc.trace.reason == pt::Termination::MaxIters) {
        ASSERT_EQ(static_cast<int>(steps.size()), max_iters);
      }
      ASSERT_EQ(loc.box, steps.back().box);
    }
  }
}

TEST_F(SyntheticTransfer, UnionOverWholeIndexContainsEveryMappedBox) {
  TransferConfig cfg;
  cfg.neighbors = index_->size();
  const auto full = TransferGallery::full_images(*index_);
  const auto& r = world_->test.records.front();
  const auto query = provider_->provide(r.id, r.size.frame(), pt::Stage::full());
  const auto res = pt::transfer_step(query, r.size, full, BoxField::object(), cfg);
  for (const auto& t : index_->records()) {
    const auto mapped = pt::clamp_box(pt::map_box(*t.object_box, t.size, r.size), r.size);
    ASSERT_TRUE(pt::contains(res.box, mapped, 1e-9));
  }
}

TEST_F(SyntheticTransfer, DeterministicTraces) {
  const TransferConfig cfg;
  const auto model = pt::TransferModel::prepare(*index_, *provider_, cfg, {"head", "body"});
  pt::LocalizeOptions opts;
  opts.parts = {"head", "body"};
  const auto a = pt::localize_batch(world_->test.records, model, *provider_, cfg, opts);
  const auto b = pt::localize_batch(world_->test.records, model, *provider_, cfg, opts);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_TRUE(a[i].object && b[i].object);
    EXPECT_EQ(a[i].object->box, b[i].object->box);
    EXPECT_EQ(a[i].object->trace.steps.size(), b[i].object->trace.steps.size());
    EXPECT_EQ(a[i].object->trace.reason, b[i].object->trace.reason);
  }
}

TEST(RasterTransfer, IterationAndPartThresholdTrends) {
  pt::SynthConfig sc;
  sc.raster = true;
  sc.seed = 0;
  const auto world = pt::generate(sc);
  ASSERT_GE(world.test.records.size(), 200u);
  const auto provider = pt::make_provider(world);
  const auto index = pt::TrainingIndex::build(world.train.records, *provider);
  const TransferConfig cfg;
  const auto model = pt::TransferModel::prepare(index, *provider, cfg, {"head"});
  pt::LocalizeOptions opts;
  opts.parts = {"head"};
  const auto results = pt::localize_batch(world.test.records, model, *provider, cfg, opts);

  const double first = pt::mean_iou(pt::predictions_at_round(results, 1), world.test.records, "object");
  const double last = pt::mean_iou(pt::to_predictions(results), world.test.records, "object");
  EXPECT_GT(last, first);

  const auto report = pt::pcp(pt::to_predictions(results), world.test.records, {0.5, 0.3}, {"head"});
  EXPECT_GT(report.parts[0].percent[1], report.parts[0].percent[0]);

  // Part boxes stay inside the object crop they were transferred within.
  for (const auto& r : results) {
    ASSERT_TRUE(r.object);
    const auto& head = r.parts.at("head");
    if (head) {
      EXPECT_TRUE(pt::contains(r.object->box, head->box, 1e-9));
    }
  }
}

}  // namespace
