#include "parttransfer/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>

#include <json.hpp>

#include "parttransfer/error.hpp"
#include "parttransfer/fvec.hpp"
#include "parttransfer/seeding.hpp"

namespace pt {

std::vector<PartPlacement> default_part_placements() {
  return {{"head", {0.55, 0.05, 0.35, 0.35}}, {"body", {0.05, 0.30, 0.90, 0.65}}};
}

void SynthConfig::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorCode::Config, msg); };
  if (n_train == 0 || n_test == 0) bad("n_train and n_test must be positive");
  if (n_clusters == 0 || n_classes == 0) bad("n_clusters and n_classes must be positive");
  if (!image_size.valid()) bad("image_size must be positive");
  if (!(std::isfinite(size_variation) && size_variation >= 0.0 && size_variation < 1.0)) {
    bad("size_variation must lie in [0, 1)");
  }
  if (!(std::isfinite(box_jitter) && box_jitter >= 0.0)) bad("box_jitter must be finite and >= 0");
  if (!(std::isfinite(feature_noise) && feature_noise >= 0.0)) {
    bad("feature_noise must be finite and >= 0");
  }
  if (!(object_scale_min > 0.0 && object_scale_min <= object_scale_max && object_scale_max <= 0.9)) {
    bad("object scales must satisfy 0 < min <= max <= 0.9");
  }
  if (raster && (image_size.width < 16.0 || image_size.height < 16.0)) {
    bad("raster images need at least 16x16 pixels");
  }
  for (const auto& p : parts) {
    if (p.name.empty()) bad("part placement without a name");
    const auto& r = p.relative;
    if (!r.valid() || r.x < 0.0 || r.y < 0.0 || r.right() > 1.0 || r.bottom() > 1.0) {
      bad("part '" + p.name + "' is placed outside its object: " + to_string(r));
    }
  }
}

namespace {

struct Cluster {
  BoundingBox relative;  // object box in unit image coordinates
};

struct Sample {
  std::size_t cluster = 0;
  std::size_t label = 0;
  ImageSize size;
  BoundingBox relative;
  std::vector<BoundingBox> parts;  // object-relative
};

// Keeps a unit-coordinate box inside [lo, hi] on both axes by shrinking, then
// shifting.
BoundingBox fit_inside(BoundingBox b, double lo, double hi) {
  b.w = std::min(b.w, hi - lo);
  b.h = std::min(b.h, hi - lo);
  b.x = std::clamp(b.x, lo, hi - b.w);
  b.y = std::clamp(b.y, lo, hi - b.h);
  return b;
}

BoundingBox jitter_box(const BoundingBox& base, double jitter, std::mt19937_64& rng) {
  if (jitter == 0.0) return base;
  std::normal_distribution<double> n(0.0, 1.0);
  const double dx = jitter * n(rng) * base.w;
  const double dy = jitter * n(rng) * base.h;
  const double sw = std::exp(jitter * n(rng));
  const double sh = std::exp(jitter * n(rng));
  const double cx = base.x + 0.5 * base.w + dx;
  const double cy = base.y + 0.5 * base.h + dy;
  const double w = base.w * sw;
  const double h = base.h * sh;
  return {cx - 0.5 * w, cy - 0.5 * h, w, h};
}

BoundingBox scale_to(const BoundingBox& rel, const ImageSize& size) {
  return {rel.x * size.width, rel.y * size.height, rel.w * size.width, rel.h * size.height};
}

BoundingBox inside(const BoundingBox& rel, const BoundingBox& object) {
  return {object.x + rel.x * object.w, object.y + rel.y * object.h, rel.w * object.w,
          rel.h * object.h};
}

std::string sample_id(const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu", split, i);
  return buf;
}

std::string class_name(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%02zu", k);
  return buf;
}

Sample draw_sample(const SynthConfig& cfg, const std::vector<Cluster>& clusters,
                   std::mt19937_64& rng) {
  Sample s;
  s.cluster = std::uniform_int_distribution<std::size_t>(0, clusters.size() - 1)(rng);
  const std::size_t independent_label =
      std::uniform_int_distribution<std::size_t>(0, cfg.n_classes - 1)(rng);
  s.label = cfg.raster ? independent_label : s.cluster % cfg.n_classes;
  std::uniform_real_distribution<double> scale(1.0 - cfg.size_variation, 1.0 + cfg.size_variation);
  s.size = {std::round(cfg.image_size.width * scale(rng)),
            std::round(cfg.image_size.height * scale(rng))};
  s.relative = fit_inside(jitter_box(clusters[s.cluster].relative, cfg.box_jitter, rng), 0.02, 0.98);
  for (const auto& p : cfg.parts) {
    s.parts.push_back(fit_inside(jitter_box(p.relative, cfg.box_jitter, rng), 0.0, 1.0));
  }
  return s;
}

std::vector<double> vector_feature(const SynthConfig& cfg, const Sample& s, std::mt19937_64& rng) {
  std::vector<double> v(cfg.n_clusters + 4, 0.0);
  v[s.cluster] = 1.0;
  v[cfg.n_clusters + 0] = s.relative.x;
  v[cfg.n_clusters + 1] = s.relative.y;
  v[cfg.n_clusters + 2] = s.relative.w;
  v[cfg.n_clusters + 3] = s.relative.h;
  if (cfg.feature_noise > 0.0) {
    std::normal_distribution<double> n(0.0, cfg.feature_noise);
    for (auto& x : v) x += n(rng);
  }
  // Feature files hold float32; rounding here keeps written worlds identical.
  for (auto& x : v) x = static_cast<float>(x);
  return v;
}

// Sinusoidal stripes of the given angle and period at pixel centre (x, y).
double stripes(double x, double y, double angle, double period) {
  const double t = (x * std::cos(angle) + y * std::sin(angle)) / period;
  return std::sin(2.0 * std::numbers::pi * t);
}

void fill_box(RasterImage& img, const BoundingBox& box,
              const std::function<float(double, double)>& shade) {
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x1 = std::min(img.width(), static_cast<int>(std::ceil(box.right())));
  const int y1 = std::min(img.height(), static_cast<int>(std::ceil(box.bottom())));
  for (int y = y0; y < y1; ++y) {
    const double cy = y + 0.5;
    if (cy < box.y || cy >= box.bottom()) continue;
    for (int x = x0; x < x1; ++x) {
      const double cx = x + 0.5;
      if (cx < box.x || cx >= box.right()) continue;
      img.at(x, y) = shade(cx, cy);
    }
  }
}

std::shared_ptr<RasterImage> render(const SynthConfig& cfg, const Sample& s,
                                    const BoundingBox& object, const std::vector<BoundingBox>& parts,
                                    std::mt19937_64& rng) {
  const int w = static_cast<int>(s.size.width);
  const int h = static_cast<int>(s.size.height);
  auto img = std::make_shared<RasterImage>(w, h, 0.2f);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  for (std::size_t k = 0; k < cfg.clutter; ++k) {
    const double cw = (0.15 + 0.2 * u(rng)) * w;
    const double ch = (0.15 + 0.2 * u(rng)) * h;
    const BoundingBox box{u(rng) * (w - cw), u(rng) * (h - ch), cw, ch};
    const double level = 0.35 + 0.25 * u(rng);
    const double angle = u(rng) * std::numbers::pi;
    fill_box(*img, box, [&](double x, double y) {
      return static_cast<float>(level + 0.15 * stripes(x, y, angle, 5.0));
    });
  }

  const double angle = std::numbers::pi * static_cast<double>(s.label) /
                       static_cast<double>(cfg.n_classes);
  fill_box(*img, object, [&](double x, double y) {
    return static_cast<float>(0.7 + 0.2 * stripes(x, y, angle, 5.0));
  });
  if (!parts.empty()) {
    fill_box(*img, parts.front(), [](double, double) { return 0.4f; });
  }

  if (cfg.feature_noise > 0.0) {
    std::normal_distribution<double> n(0.0, cfg.feature_noise);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        img->at(x, y) = static_cast<float>(std::clamp(img->at(x, y) + n(rng), 0.0, 1.0));
      }
    }
  }
  img->quantize_8bit();
  return img;
}

SynthSplit make_split(const SynthConfig& cfg, const std::vector<Cluster>& clusters, const char* name,
                      std::size_t count, std::uint64_t stream) {
  std::mt19937_64 rng(derive_seed(cfg.seed, stream));
  SynthSplit split;
  for (std::size_t i = 0; i < count; ++i) {
    const Sample s = draw_sample(cfg, clusters, rng);
    AnnotatedImage r;
    r.id = sample_id(name, i);
    r.size = s.size;
    r.class_label = class_name(s.label);
    r.object_box = scale_to(s.relative, s.size);
    std::vector<BoundingBox> parts;
    for (std::size_t p = 0; p < cfg.parts.size(); ++p) {
      parts.push_back(inside(s.parts[p], *r.object_box));
      r.parts[cfg.parts[p].name] = parts.back();
    }
    if (cfg.raster) {
      split.images[r.id] = render(cfg, s, *r.object_box, parts, rng);
    } else {
      split.features["full"].emplace_back(vector_feature(cfg, s, rng));
      split.features["object"].emplace_back(vector_feature(cfg, s, rng));
    }
    split.clusters.push_back(s.cluster);
    split.records.push_back(std::move(r));
  }
  return split;
}

}  // namespace

SynthWorld generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(derive_seed(config.seed, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Cluster> clusters(config.n_clusters);
  for (auto& c : clusters) {
    const double span = config.object_scale_max - config.object_scale_min;
    const double w = config.object_scale_min + span * u(rng);
    const double h = config.object_scale_min + span * u(rng);
    c.relative = {0.05 + u(rng) * (0.9 - w), 0.05 + u(rng) * (0.9 - h), w, h};
  }
  SynthWorld world;
  world.config = config;
  world.train = make_split(config, clusters, "train", config.n_train, 1);
  world.test = make_split(config, clusters, "test", config.n_test, 2);
  return world;
}

std::unique_ptr<FeatureProvider> make_provider(const SynthWorld& world) {
  if (world.config.raster) {
    auto provider = std::make_unique<RasterProvider>();
    for (const auto* split : {&world.train, &world.test}) {
      for (const auto& [id, img] : split->images) provider->add(id, img);
    }
    return provider;
  }
  auto provider = std::make_unique<PrecomputedProvider>();
  for (const auto* split : {&world.train, &world.test}) {
    for (const auto& [stage, rows] : split->features) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        provider->add(split->records[i].id, Stage::parse(stage), rows[i]);
      }
    }
  }
  return provider;
}

void write_world(const SynthWorld& world, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write_split = [&](const SynthSplit& split, const std::string& name) {
    std::vector<AnnotatedImage> records = split.records;
    if (world.config.raster) {
      fs::create_directories(dir / "images");
      for (auto& r : records) {
        const std::string rel = "images/" + r.id + ".pgm";
        write_pgm(dir / rel, *split.images.at(r.id));
        r.image = rel;
      }
    } else {
      for (const auto& [stage, rows] : split.features) {
        const std::string file = name + "_" + stage + ".fvec";
        write_fvec(dir / file, rows);
        for (std::size_t i = 0; i < records.size(); ++i) records[i].features[stage] = {file, i, {}};
      }
    }
    write_manifest(dir / (name + ".jsonl"), records);
  };
  write_split(world.train, "train");
  write_split(world.test, "test");

  const auto& c = world.config;
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : c.parts) {
    parts.push_back({{"name", p.name},
                     {"relative", {p.relative.x, p.relative.y, p.relative.w, p.relative.h}}});
  }
  const nlohmann::json summary = {
      {"seed", c.seed},           {"n_train", c.n_train},
      {"n_test", c.n_test},       {"n_clusters", c.n_clusters},
      {"n_classes", c.n_classes}, {"raster", c.raster},
      {"image_size", {c.image_size.width, c.image_size.height}},
      {"size_variation", c.size_variation},
      {"box_jitter", c.box_jitter}, {"feature_noise", c.feature_noise},
      {"object_scale", {c.object_scale_min, c.object_scale_max}},
      {"clutter", c.clutter},     {"parts", parts}};
  std::ofstream out(dir / "synth_config.json");
  if (!out) fail(ErrorCode::Io, "cannot write '" + (dir / "synth_config.json").string() + "'");
  out << summary.dump(2) << '\n';
}

BoundingBox center_prior(const std::vector<AnnotatedImage>& train, const ImageSize& size) {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
  std::size_t n = 0;
  for (const auto& r : train) {
    if (!r.object_box) continue;
    const BoundingBox rel = map_box(*r.object_box, r.size, kUnitFrame);
    x += rel.x;
    y += rel.y;
    w += rel.w;
    h += rel.h;
    ++n;
  }
  if (n == 0) fail(ErrorCode::EmptyInput, "no training object boxes for the center prior");
  const double k = static_cast<double>(n);
  return map_box({x / k, y / k, w / k, h / k}, kUnitFrame, size);
}

}  // namespace pt
