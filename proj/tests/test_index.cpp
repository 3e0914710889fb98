#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "parttransfer/error.hpp"
#include "parttransfer/fvec.hpp"
#include "parttransfer/index.hpp"
#include "parttransfer/manifest.hpp"
#include "parttransfer/parallel.hpp"
#include "test_support.hpp"

namespace {

using pt::AnnotatedImage;
using pt::FeatureVector;
using pt::Stage;

pt::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const pt::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected pt::Error";
  return pt::ErrorCode::Io;
}

AnnotatedImage record(const std::string& id, std::vector<double> full) {
  AnnotatedImage r;
  r.id = id;
  r.size = {100, 80};
  r.class_label = "c";
  r.object_box = pt::BoundingBox{10, 10, 50, 40};
  r.features["full"].inline_values = std::move(full);
  return r;
}

TEST(Manifest, ParsesAllFields) {
  std::istringstream in(
      "# comment\n"
      "\n"
      R"({"id": "a", "width": 500, "height": 375, "class": "001", "object_box": [1, 2, 3, 4],)"
      R"( "parts": {"head": [1, 2, 1, 1], "body": null},)"
      R"( "features": {"full": {"file": "f.fvec", "row": 3}, "object": [0.5, 1.5]},)"
      R"( "image": "img/a.pgm"})"
      "\n");
  const auto rs = pt::parse_manifest(in, "mem", "/data");
  ASSERT_EQ(rs.size(), 1u);
  const auto& r = rs[0];
  EXPECT_EQ(r.id, "a");
  EXPECT_EQ(r.size, (pt::ImageSize{500, 375}));
  EXPECT_EQ(r.class_label, "001");
  EXPECT_EQ(r.object_box, (pt::BoundingBox{1, 2, 3, 4}));
  EXPECT_EQ(r.parts.at("head"), (pt::BoundingBox{1, 2, 1, 1}));
  EXPECT_FALSE(r.parts.at("body").has_value());
  EXPECT_EQ(r.features.at("full").file, "/data/f.fvec");
  EXPECT_EQ(r.features.at("full").row, 3u);
  EXPECT_EQ(r.features.at("object").inline_values, (std::vector<double>{0.5, 1.5}));
  EXPECT_EQ(r.image, "/data/img/a.pgm");
  EXPECT_EQ(r.box(pt::BoxField::part("head")), r.parts.at("head"));
  EXPECT_FALSE(r.box(pt::BoxField::part("tail")).has_value());
}

TEST(Manifest, WriteParseRoundTrip) {
  auto a = record("a", {1, 2});
  a.parts["head"] = pt::BoundingBox{11, 12, 5, 5};
  a.parts["tail"] = std::nullopt;
  std::stringstream buf;
  pt::write_manifest(buf, {a, record("b", {3, 4})});
  const auto back = pt::parse_manifest(buf, "mem");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].parts, a.parts);
  EXPECT_EQ(back[0].object_box, a.object_box);
  EXPECT_EQ(back[1].features.at("full").inline_values, (std::vector<double>{3, 4}));
}

TEST(Manifest, ParseErrorsNameTheLine) {
  std::istringstream in("{\"id\": \"a\", \"width\": 1, \"height\": 1}\n{not json}\n");
  try {
    pt::parse_manifest(in, "m.jsonl");
    FAIL();
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::ErrorCode::Parse);
    EXPECT_NE(std::string(e.what()).find("m.jsonl:2"), std::string::npos);
  }
  std::istringstream bad_box(R"({"id": "a", "width": 1, "height": 1, "object_box": [1, 2]})");
  EXPECT_EQ(code_of([&] { pt::parse_manifest(bad_box, "m"); }), pt::ErrorCode::Parse);
}

TEST(Validation, DuplicateIdsAndOutOfImageBoxes) {
  EXPECT_EQ(code_of([] { pt::validate_records({record("a", {1}), record("a", {2})}); }),
            pt::ErrorCode::DuplicateId);
  auto big = record("wide", {1});
  big.object_box = pt::BoundingBox{60, 10, 50, 10};
  try {
    pt::validate_records({big});
    FAIL();
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::ErrorCode::Validation);
    EXPECT_NE(std::string(e.what()).find("wide"), std::string::npos);
  }
  auto part = record("p", {1});
  part.parts["head"] = pt::BoundingBox{0, 0, 0, 5};
  EXPECT_EQ(code_of([&] { pt::validate_records({part}); }), pt::ErrorCode::Validation);
}

TEST(TrainingIndex, EmptyManifestFails) {
  pt::PrecomputedProvider p;
  EXPECT_EQ(code_of([&] { pt::TrainingIndex::build({}, p); }), pt::ErrorCode::EmptyIndex);
}

TEST(TrainingIndex, BuildsFromInlineFeatures) {
  std::vector<AnnotatedImage> rs{record("a", {1, 0}), record("b", {0, 1}), record("c", {1, 1})};
  for (auto& r : rs) r.features["object"].inline_values = {2, 2};
  rs[1].features.erase("object");
  const auto provider = pt::load_provider(rs);
  const auto index = pt::TrainingIndex::build(rs, *provider);
  EXPECT_EQ(index.size(), 3u);
  EXPECT_EQ(index.row_of("b"), 1u);
  EXPECT_FALSE(index.row_of("zz").has_value());
  EXPECT_TRUE(index.has_stage(Stage::full()));
  // "object" is missing for b, so it is not indexed.
  EXPECT_FALSE(index.has_stage(Stage::object()));
  EXPECT_EQ(code_of([&] { index.table(Stage::object()); }), pt::ErrorCode::StageUnavailable);
}

TEST(TrainingIndex, FvecBackedFeatures) {
  pt::testing::TempDir dir;
  pt::write_fvec(dir / "f.fvec", std::vector<FeatureVector>{FeatureVector({1, 0}),
                                                            FeatureVector({0, 1})});
  std::ofstream(dir / "m.jsonl")
      << R"({"id": "a", "width": 10, "height": 10, "features": {"full": {"file": "f.fvec", "row": 1}}})"
      << "\n";
  const auto rs = pt::read_manifest(dir / "m.jsonl");
  const auto provider = pt::load_provider(rs);
  EXPECT_EQ(provider->provide("a", {0, 0, 10, 10}, Stage::full()), FeatureVector({0, 1}));

  std::ofstream(dir / "bad.jsonl")
      << R"({"id": "a", "width": 10, "height": 10, "features": {"full": {"file": "f.fvec", "row": 7}}})"
      << "\n";
  EXPECT_EQ(code_of([&] { pt::load_provider(pt::read_manifest(dir / "bad.jsonl")); }),
            pt::ErrorCode::MissingFeature);
  std::ofstream(dir / "gone.jsonl")
      << R"({"id": "a", "width": 10, "height": 10, "features": {"full": {"file": "nope.fvec", "row": 0}}})"
      << "\n";
  try {
    pt::load_provider(pt::read_manifest(dir / "gone.jsonl"));
    FAIL();
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::ErrorCode::MissingFeature);
    EXPECT_NE(std::string(e.what()).find("nope.fvec"), std::string::npos);
  }
}

TEST(Knn, ContractExamples) {
  std::vector<AnnotatedImage> rs{record("a", {1, 0}), record("b", {0, 1}), record("c", {1, 1})};
  const auto provider = pt::load_provider(rs);
  const auto index = pt::TrainingIndex::build(rs, *provider);

  const auto one = pt::knn(index, FeatureVector({0, 1}), Stage::full(), 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].id, "b");
  EXPECT_NEAR(one[0].distance, 0.0, 1e-15);

  const auto excl = pt::knn(index, FeatureVector({0, 1}), Stage::full(), 1, std::string("b"));
  ASSERT_EQ(excl.size(), 1u);
  EXPECT_NE(excl[0].id, "b");

  const auto all = pt::knn(index, FeatureVector({0, 1}), Stage::full(), 10);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_TRUE(std::is_sorted(all.begin(), all.end(),
                             [](const auto& x, const auto& y) { return x.distance < y.distance; }));
}

TEST(Knn, RejectsBadArguments) {
  pt::FeatureTable t(2);
  EXPECT_EQ(code_of([&] { t.knn(FeatureVector({1, 0}), 1, pt::Metric::Cosine); }),
            pt::ErrorCode::EmptyIndex);
  t.append(FeatureVector({1, 0}));
  EXPECT_EQ(code_of([&] { t.knn(FeatureVector({1, 0}), 0, pt::Metric::Cosine); }),
            pt::ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { t.knn(FeatureVector({1, 0, 0}), 1, pt::Metric::Cosine); }),
            pt::ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { t.append(FeatureVector({1})); }), pt::ErrorCode::DimensionMismatch);
}

// Integer-valued features keep every dot product exact, so the oracle's
// plain loops and the kernels agree bit for bit and ties are genuine.
struct OracleCase {
  std::vector<std::vector<double>> rows;
  std::vector<double> query;
};

OracleCase random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> n_dist(1, 1000), d_dist(1, 256);
  std::uniform_int_distribution<int> v(-3, 3);
  const std::size_t n = n_dist(rng), d = d_dist(rng);
  OracleCase c;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    // A share of rows repeat an earlier one to force exact ties.
    if (i > 0 && rng() % 4 == 0) {
      row = c.rows[rng() % i];
    } else {
      for (auto& x : row) x = v(rng);
      row[rng() % d] = 4;  // never the zero vector
    }
    c.rows.push_back(std::move(row));
  }
  c.query.resize(d);
  for (auto& x : c.query) x = v(rng);
  c.query[0] = 5;
  return c;
}

std::vector<pt::Neighbor> oracle_topm(const OracleCase& c, std::size_t m, pt::Metric metric,
                                      std::optional<std::size_t> exclude) {
  std::vector<pt::Neighbor> all;
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    if (exclude == i) continue;
    double dot = 0, qq = 0, rr = 0, sq = 0;
    for (std::size_t k = 0; k < c.query.size(); ++k) {
      dot += c.query[k] * c.rows[i][k];
      qq += c.query[k] * c.query[k];
      rr += c.rows[i][k] * c.rows[i][k];
      sq += (c.query[k] - c.rows[i][k]) * (c.query[k] - c.rows[i][k]);
    }
    const double d = metric == pt::Metric::Euclidean ? std::sqrt(sq)
                                                     : pt::cosine_distance(dot, qq, rr);
    all.push_back({i, d});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.distance < b.distance; });
  all.resize(std::min(m, all.size()));
  return all;
}

TEST(KnnOracle, MatchesFullSortIncludingTieOrder) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const OracleCase c = random_case(rng);
    pt::FeatureTable table(c.query.size());
    for (const auto& r : c.rows) table.append(FeatureVector(r));
    const std::size_t m = 1 + rng() % 12;
    const auto metric = trial % 2 == 0 ? pt::Metric::Cosine : pt::Metric::Euclidean;
    std::optional<std::size_t> exclude;
    if (trial % 3 == 0) exclude = rng() % c.rows.size();
    if (exclude && c.rows.size() == 1) continue;
    ASSERT_EQ(table.knn(FeatureVector(c.query), m, metric, exclude),
              oracle_topm(c, m, metric, exclude))
        << "trial " << trial;
  }
}

TEST(KnnOracle, ThreadCountDoesNotChangeResults) {
  std::mt19937_64 rng(77);
  OracleCase c;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 3000; ++i) {
    std::vector<double> row(128);
    for (auto& x : row) x = n(rng);
    c.rows.push_back(row);
  }
  c.query = c.rows[5];
  pt::FeatureTable table(128);
  for (const auto& r : c.rows) table.append(FeatureVector(r));
  pt::set_thread_count(1);
  const auto serial = table.knn(FeatureVector(c.query), 20, pt::Metric::Cosine);
  pt::set_thread_count(4);
  const auto parallel = table.knn(FeatureVector(c.query), 20, pt::Metric::Cosine);
  pt::set_thread_count(1);
  EXPECT_EQ(serial, parallel);
  EXPECT_EQ(serial.front().row, 5u);
}

}  // namespace
