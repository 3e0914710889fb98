#include "parttransfer/index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parttransfer/error.hpp"
#include "parttransfer/fvec.hpp"
#include "parttransfer/parallel.hpp"
#include "parttransfer/simd.hpp"

namespace pt {

void FeatureTable::append(const FeatureVector& v) {
  if (dim_ == 0 && rows() == 0) dim_ = v.dim();
  if (v.dim() != dim_ || dim_ == 0) {
    fail(ErrorCode::DimensionMismatch, "feature dim " + std::to_string(v.dim()) +
                                           " does not match table dim " + std::to_string(dim_));
  }
  data_.insert(data_.end(), v.values.begin(), v.values.end());
  sq_norms_.push_back(simd::dot(v.view(), v.view()));
}

std::vector<double> FeatureTable::distances(const FeatureVector& query, Metric metric) const {
  if (query.dim() != dim_) {
    fail(ErrorCode::DimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                           " does not match index dim " + std::to_string(dim_));
  }
  std::vector<double> out(rows());
  const double q_sq = simd::dot(query.view(), query.view());
  auto scan = [&](std::size_t begin, std::size_t end) {
    const auto& k = simd::active();
    for (std::size_t i = begin; i < end; ++i) {
      const double* r = data_.data() + i * dim_;
      if (metric == Metric::Euclidean) {
        out[i] = std::sqrt(k.squared_distance(query.values.data(), r, dim_));
      } else {
        out[i] = cosine_distance(k.dot(query.values.data(), r, dim_), q_sq, sq_norms_[i]);
      }
    }
  };
  // Spawning workers only pays off for large scans.
  constexpr std::size_t kParallelWork = std::size_t{1} << 18;
  if (rows() * dim_ >= kParallelWork) {
    parallel_for(rows(), scan);
  } else {
    scan(0, rows());
  }
  return out;
}

std::vector<Neighbor> FeatureTable::knn(const FeatureVector& query, std::size_t m, Metric metric,
                                        std::optional<std::size_t> exclude) const {
  if (rows() == 0) fail(ErrorCode::EmptyIndex, "knn over an empty index");
  if (m == 0) fail(ErrorCode::InvalidArgument, "knn needs M >= 1");
  const std::vector<double> dist = distances(query, metric);

  std::vector<Neighbor> candidates;
  candidates.reserve(rows());
  for (std::size_t i = 0; i < rows(); ++i) {
    if (exclude && *exclude == i) continue;
    candidates.push_back({i, dist[i]});
  }
  const std::size_t k = std::min(m, candidates.size());
  auto closer = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.row < b.row);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), closer);
  candidates.resize(k);
  return candidates;
}

TrainingIndex TrainingIndex::build(std::vector<AnnotatedImage> records,
                                   const FeatureProvider& provider, Metric metric) {
  if (records.empty()) fail(ErrorCode::EmptyIndex, "training manifest has no records");
  validate_records(records);

  TrainingIndex index;
  index.metric_ = metric;
  for (std::size_t i = 0; i < records.size(); ++i) index.rows_[records[i].id] = i;

  std::vector<Stage> stages = {Stage::full()};
  if (!provider.region_sensitive()) {
    // Every stage the first record offers that all others offer too.
    for (const auto& [name, ref] : records.front().features) {
      const Stage stage = Stage::parse(name);
      if (stage == Stage::full()) continue;
      const bool everywhere = std::all_of(records.begin(), records.end(), [&](const auto& r) {
        return provider.has(r.id, stage);
      });
      if (everywhere) stages.push_back(stage);
    }
  }

  for (const Stage& stage : stages) {
    std::vector<FeatureVector> rows(records.size());
    parallel_for(records.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          rows[i] = provider.provide(records[i].id, records[i].size.frame(), stage);
        } catch (const Error& e) {
          fail(ErrorCode::MissingFeature,
               "record '" + records[i].id + "' stage " + stage.name() + ": " + e.what());
        }
      }
    });
    auto table = std::make_shared<FeatureTable>(provider.dim());
    for (const auto& v : rows) table->append(v);
    index.tables_[stage.name()] = std::move(table);
  }
  index.records_ = std::move(records);
  return index;
}

std::optional<std::size_t> TrainingIndex::row_of(const std::string& id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> TrainingIndex::stages() const {
  std::vector<std::string> out;
  for (const auto& [name, table] : tables_) out.push_back(name);
  return out;
}

std::shared_ptr<const FeatureTable> TrainingIndex::table(const Stage& stage) const {
  auto it = tables_.find(stage.name());
  if (it == tables_.end()) {
    fail(ErrorCode::StageUnavailable, "stage '" + stage.name() + "' is not indexed");
  }
  return it->second;
}

std::vector<RetrievedNeighbor> knn(const TrainingIndex& index, const FeatureVector& query,
                                   const Stage& stage, std::size_t m,
                                   const std::optional<std::string>& exclude) {
  if (index.size() == 0) fail(ErrorCode::EmptyIndex, "knn over an empty index");
  const auto table = index.table(stage);
  std::optional<std::size_t> excluded_row;
  if (exclude) excluded_row = index.row_of(*exclude);
  std::vector<RetrievedNeighbor> out;
  for (const Neighbor& n : table->knn(query, m, index.metric(), excluded_row)) {
    out.push_back({index.record(n.row).id, n.distance});
  }
  return out;
}

namespace {

void add_stored_features(PrecomputedProvider& provider, const std::vector<AnnotatedImage>& records,
                         std::map<std::string, std::vector<FeatureVector>>& files) {
  for (const auto& r : records) {
    for (const auto& [stage_name, ref] : r.features) {
      const Stage stage = Stage::parse(stage_name);
      if (ref.is_inline()) {
        provider.add(r.id, stage, FeatureVector(ref.inline_values));
        continue;
      }
      auto it = files.find(ref.file);
      if (it == files.end()) it = files.emplace(ref.file, read_fvec(ref.file)).first;
      if (ref.row >= it->second.size()) {
        fail(ErrorCode::MissingFeature, "'" + ref.file + "' has no row " + std::to_string(ref.row) +
                                            " (record '" + r.id + "')");
      }
      provider.add(r.id, stage, it->second[ref.row]);
    }
  }
}

}  // namespace

std::unique_ptr<FeatureProvider> load_provider(const std::vector<AnnotatedImage>& train,
                                               const std::vector<AnnotatedImage>& test) {
  auto all_have_images = [](const std::vector<AnnotatedImage>& rs) {
    return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.image.has_value(); });
  };
  if (!train.empty() && all_have_images(train) && all_have_images(test)) {
    auto provider = std::make_unique<RasterProvider>();
    for (const auto* rs : {&train, &test}) {
      for (const auto& r : *rs) {
        if (provider->has(r.id, Stage::full())) continue;
        provider->add(r.id, std::make_shared<RasterImage>(read_pgm(*r.image)));
      }
    }
    return provider;
  }
  auto provider = std::make_unique<PrecomputedProvider>();
  std::map<std::string, std::vector<FeatureVector>> files;
  add_stored_features(*provider, train, files);
  add_stored_features(*provider, test, files);
  return provider;
}

std::unique_ptr<FeatureProvider> load_provider(const std::vector<AnnotatedImage>& records) {
  return load_provider(records, {});
}

}  // namespace pt
