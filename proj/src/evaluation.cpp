#include "parttransfer/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "parttransfer/error.hpp"
#include "parttransfer/parallel.hpp"

namespace pt {

const PartPcp* PcpReport::find(const std::string& part) const {
  for (const auto& p : parts) {
    if (p.part == part) return &p;
  }
  return nullptr;
}

namespace {

std::map<std::string, const AnnotatedImage*> by_id(const std::vector<AnnotatedImage>& truth) {
  std::map<std::string, const AnnotatedImage*> out;
  for (const auto& r : truth) out.emplace(r.id, &r);
  return out;
}

std::optional<BoundingBox> truth_box(const AnnotatedImage& record, const std::string& part) {
  if (part == kObjectPart) return record.object_box;
  auto it = record.parts.find(part);
  return it == record.parts.end() ? std::nullopt : it->second;
}

std::optional<BoundingBox> predicted_box(const PartPredictions& p, const std::string& part) {
  auto it = p.find(part);
  return it == p.end() ? std::nullopt : it->second;
}

}  // namespace

PcpReport pcp(const PredictionSet& predictions, const std::vector<AnnotatedImage>& truth,
              const std::vector<double>& thresholds, const std::vector<std::string>& parts,
              const PcpOptions& options) {
  if (thresholds.empty()) fail(ErrorCode::InvalidArgument, "PCP needs at least one threshold");
  for (double t : thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      fail(ErrorCode::InvalidArgument, "PCP thresholds must lie in (0, 1]");
    }
  }
  const auto gt = by_id(truth);
  std::vector<const AnnotatedImage*> records;
  std::vector<const PartPredictions*> preds;
  for (const auto& [id, p] : predictions) {
    auto it = gt.find(id);
    if (it == gt.end()) fail(ErrorCode::UnknownImage, "prediction for unknown image '" + id + "'");
    records.push_back(it->second);
    preds.push_back(&p);
  }

  std::vector<std::string> names = parts;
  if (names.empty()) {
    std::set<std::string> seen;
    for (const auto* p : preds) {
      for (const auto& [name, box] : *p) seen.insert(name);
    }
    names.assign(seen.begin(), seen.end());
  }

  PcpReport report;
  report.thresholds = thresholds;
  for (const auto& part : names) {
    // Per sample: IoU, or -1 for a skipped sample.
    std::vector<double> scores(records.size());
    parallel_for(records.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto g = truth_box(*records[i], part);
        const auto p = predicted_box(*preds[i], part);
        if (!g) {
          scores[i] = -1.0;
        } else if (!p) {
          scores[i] = options.absent_as_miss ? 0.0 : -1.0;
        } else {
          scores[i] = iou(*p, *g);
        }
      }
    });
    PartPcp row;
    row.part = part;
    row.hits.assign(thresholds.size(), 0);
    for (double s : scores) {
      if (s < 0.0) {
        ++row.skipped;
        continue;
      }
      ++row.evaluated;
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        const bool hit = options.strict ? s > thresholds[k] : s >= thresholds[k];
        if (hit) ++row.hits[k];
      }
    }
    for (std::size_t h : row.hits) {
      row.percent.push_back(row.evaluated == 0 ? 0.0
                                               : 100.0 * static_cast<double>(h) /
                                                     static_cast<double>(row.evaluated));
    }
    report.parts.push_back(std::move(row));
  }
  return report;
}

double mean_iou(const PredictionSet& predictions, const std::vector<AnnotatedImage>& truth,
                const std::string& part) {
  const auto gt = by_id(truth);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [id, p] : predictions) {
    auto it = gt.find(id);
    if (it == gt.end()) fail(ErrorCode::UnknownImage, "prediction for unknown image '" + id + "'");
    const auto g = truth_box(*it->second, part);
    const auto b = predicted_box(p, part);
    if (!g || !b) continue;
    sum += iou(*b, *g);
    ++n;
  }
  if (n == 0) fail(ErrorCode::EmptyInput, "no samples with both a prediction and ground truth for '" + part + "'");
  return sum / static_cast<double>(n);
}

double accuracy(const std::map<std::string, std::string>& predictions,
                const std::vector<AnnotatedImage>& truth) {
  if (predictions.empty()) fail(ErrorCode::EmptyInput, "no class predictions");
  const auto gt = by_id(truth);
  std::size_t correct = 0;
  for (const auto& [id, label] : predictions) {
    auto it = gt.find(id);
    if (it == gt.end()) fail(ErrorCode::UnknownImage, "prediction for unknown image '" + id + "'");
    if (!it->second->class_label) fail(ErrorCode::Validation, "record '" + id + "' has no class");
    if (*it->second->class_label == label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

PredictionSet ground_truth_predictions(const std::vector<AnnotatedImage>& truth,
                                       const std::vector<std::string>& parts) {
  PredictionSet out;
  for (const auto& r : truth) {
    auto& p = out[r.id];
    for (const auto& part : parts) p[part] = truth_box(r, part);
  }
  return out;
}

std::vector<std::string> annotated_parts(const std::vector<AnnotatedImage>& records) {
  std::set<std::string> names;
  for (const auto& r : records) {
    for (const auto& [name, box] : r.parts) names.insert(name);
  }
  return {names.begin(), names.end()};
}

std::vector<ReportCheck> check_report(const PcpReport& report,
                                      const std::vector<AnnotatedImage>& truth) {
  std::vector<ReportCheck> checks;

  // Thresholds in the report need not be sorted; compare every ordered pair.
  ReportCheck monotone{"pcp-monotone", true, ""};
  for (const auto& row : report.parts) {
    for (std::size_t a = 0; a < report.thresholds.size(); ++a) {
      for (std::size_t b = 0; b < report.thresholds.size(); ++b) {
        if (report.thresholds[a] < report.thresholds[b] && row.hits[a] < row.hits[b]) {
          monotone.passed = false;
          std::ostringstream msg;
          msg << row.part << ": " << row.percent[a] << "% at " << report.thresholds[a] << " < "
              << row.percent[b] << "% at " << report.thresholds[b];
          monotone.detail = msg.str();
        }
      }
    }
  }
  checks.push_back(monotone);

  std::vector<std::string> parts;
  for (const auto& row : report.parts) parts.push_back(row.part);
  ReportCheck self{"ground-truth-self-100", true, ""};
  const PcpReport gt = pcp(ground_truth_predictions(truth, parts), truth, report.thresholds, parts);
  for (const auto& row : gt.parts) {
    for (std::size_t k = 0; k < row.percent.size(); ++k) {
      if (row.evaluated > 0 && row.percent[k] != 100.0) {
        self.passed = false;
        std::ostringstream msg;
        msg << row.part << ": " << row.percent[k] << "% at " << gt.thresholds[k];
        self.detail = msg.str();
      }
    }
  }
  checks.push_back(self);
  return checks;
}

}  // namespace pt
