#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parttransfer/evaluation.hpp"

namespace pt {

enum class ReportFormat { Text, Structured };

std::string_view to_string(ReportFormat format);
ReportFormat parse_report_format(std::string_view text);

struct PcpRow {
  std::string label;
  PcpReport report;
};

/// One row per configuration (e.g. "M=1"), one column group per part and
/// one column per threshold.
std::string render_pcp_sweep(const std::vector<PcpRow>& rows, const std::vector<std::string>& parts,
                             ReportFormat format);

/// One row per threshold, with PCP per part for the run seeded with the
/// ground-truth object box ("given") and the fully automatic run ("unknown").
/// Either side may be missing.
std::string render_oracle_table(const std::optional<PcpReport>& given,
                                const std::optional<PcpReport>& unknown,
                                const std::vector<std::string>& parts, ReportFormat format);

struct AccuracyRow {
  std::string region;
  double accuracy = 0.0;
};

std::string render_accuracy_table(const std::vector<AccuracyRow>& rows, ReportFormat format);

std::string render_checks(const std::vector<ReportCheck>& checks, ReportFormat format);

}  // namespace pt
