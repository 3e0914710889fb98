#include "parttransfer/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "parttransfer/error.hpp"

namespace pt {

using nlohmann::json;

std::string_view to_string(ReportFormat format) {
  return format == ReportFormat::Text ? "text" : "structured";
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "text") return ReportFormat::Text;
  if (text == "structured" || text == "json") return ReportFormat::Structured;
  fail(ErrorCode::InvalidArgument, "unknown report format '" + std::string(text) + "'");
}

namespace {

using Row = std::vector<std::string>;

std::string fixed1(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << v;
  return s.str();
}

std::string threshold_label(double t) {
  std::ostringstream s;
  s << ">=" << t;
  return s.str();
}

// Plain aligned table. The first column is left-aligned, the rest right.
std::string layout_table(const std::vector<Row>& header, const std::vector<Row>& body) {
  std::size_t cols = 0;
  for (const auto& r : header) cols = std::max(cols, r.size());
  for (const auto& r : body) cols = std::max(cols, r.size());
  std::vector<std::size_t> width(cols, 0);
  auto measure = [&](const Row& r) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  };
  for (const auto& r : header) measure(r);
  for (const auto& r : body) measure(r);

  std::ostringstream out;
  auto emit = [&](const Row& r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string cell = c < r.size() ? r[c] : "";
      if (c > 0) out << " | ";
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(width[c])) << cell;
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << cell;
      }
    }
    out << '\n';
  };
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  total += 3 * (cols - 1);
  for (const auto& r : header) emit(r);
  out << std::string(total, '-') << '\n';
  for (const auto& r : body) emit(r);
  return out.str();
}

json pcp_json(const PcpReport& report) {
  json parts = json::array();
  for (const auto& p : report.parts) {
    parts.push_back({{"part", p.part}, {"percent", p.percent}, {"hits", p.hits},
                     {"evaluated", p.evaluated}, {"skipped", p.skipped}});
  }
  return {{"thresholds", report.thresholds}, {"parts", parts}};
}

std::string pcp_cell(const PcpReport& report, const std::string& part, std::size_t k) {
  const PartPcp* p = report.find(part);
  return p == nullptr || p->evaluated == 0 ? "-" : fixed1(p->percent[k]);
}

}  // namespace

std::string render_pcp_sweep(const std::vector<PcpRow>& rows, const std::vector<std::string>& parts,
                             ReportFormat format) {
  if (format == ReportFormat::Structured) {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"label", r.label}, {"pcp", pcp_json(r.report)}});
    return json{{"table", "pcp_sweep"}, {"rows", out}}.dump(2) + "\n";
  }
  if (rows.empty()) return "";
  const auto& thresholds = rows.front().report.thresholds;
  Row groups{""}, columns{""};
  for (const auto& part : parts) {
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      groups.push_back(k == 0 ? part : "");
      columns.push_back(threshold_label(thresholds[k]));
    }
  }
  std::vector<Row> body;
  for (const auto& r : rows) {
    Row line{r.label};
    for (const auto& part : parts) {
      for (std::size_t k = 0; k < thresholds.size(); ++k) line.push_back(pcp_cell(r.report, part, k));
    }
    body.push_back(std::move(line));
  }
  return layout_table({groups, columns}, body);
}

std::string render_oracle_table(const std::optional<PcpReport>& given,
                                const std::optional<PcpReport>& unknown,
                                const std::vector<std::string>& parts, ReportFormat format) {
  if (format == ReportFormat::Structured) {
    json out = {{"table", "oracle_box"}};
    out["given"] = given ? pcp_json(*given) : json(nullptr);
    out["unknown"] = unknown ? pcp_json(*unknown) : json(nullptr);
    return out.dump(2) + "\n";
  }
  const PcpReport* ref = given ? &*given : (unknown ? &*unknown : nullptr);
  if (ref == nullptr) return "";
  Row groups{"Method"}, columns{""};
  for (const char* side : {"Oracle box given", "Oracle box unknown"}) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      groups.push_back(i == 0 ? side : "");
      columns.push_back(parts[i]);
    }
  }
  std::vector<Row> body;
  for (std::size_t k = 0; k < ref->thresholds.size(); ++k) {
    Row line{"Transfer (" + threshold_label(ref->thresholds[k]) + ")"};
    for (const auto* side : {&given, &unknown}) {
      for (const auto& part : parts) line.push_back(*side ? pcp_cell(**side, part, k) : "-");
    }
    body.push_back(std::move(line));
  }
  return layout_table({groups, columns}, body);
}

std::string render_accuracy_table(const std::vector<AccuracyRow>& rows, ReportFormat format) {
  if (format == ReportFormat::Structured) {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"region", r.region}, {"accuracy", r.accuracy}});
    return json{{"table", "accuracy"}, {"rows", out}}.dump(2) + "\n";
  }
  std::vector<Row> body;
  for (const auto& r : rows) body.push_back({r.region, fixed1(r.accuracy)});
  return layout_table({{"Input image region", "Accuracy (%)"}}, body);
}

std::string render_checks(const std::vector<ReportCheck>& checks, ReportFormat format) {
  if (format == ReportFormat::Structured) {
    json out = json::array();
    for (const auto& c : checks) {
      out.push_back({{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    return json{{"checks", out}}.dump(2) + "\n";
  }
  std::ostringstream s;
  for (const auto& c : checks) {
    s << (c.passed ? "ok   " : "FAIL ") << c.name;
    if (!c.detail.empty()) s << ": " << c.detail;
    s << '\n';
  }
  return s.str();
}

}  // namespace pt
