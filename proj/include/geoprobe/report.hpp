#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoprobe/harness.hpp"

namespace geoprobe {

enum class ReportFormat { TextTable, Structured };

inline constexpr std::string_view kMetricsHeader = "Acc Acc/attack ASR Replacement";

/// "0.9431 0.8016 0.1500 0.0671": the four metrics to 4 decimals.
std::string format_metrics_row(const MetricsReport& report);

/// Header line followed by one row per report, in order.
std::string format_metrics_table(const std::vector<MetricsReport>& reports);

/// Original and adversarial sentences per attacked sample, replaced words
/// wrapped in `[[ ]]`.
std::string format_examples(const std::vector<SampleOutcome>& samples,
                            bool successes_only = false);

nlohmann::json report_to_json(const MetricsReport& report, const std::vector<SampleOutcome>& samples);

struct StructuredReport {
  MetricsReport metrics;
  std::vector<SampleOutcome> samples;
};

/// Throws MalformedReport.
StructuredReport report_from_json(const nlohmann::json& doc);

/// TextTable: metrics table. Structured: pretty-printed JSON document.
std::string emit_report(const MetricsReport& report, const std::vector<SampleOutcome>& samples,
                        ReportFormat format);

StructuredReport parse_structured_report(std::string_view text);
StructuredReport load_structured_report(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames, so readers never see a
/// partial file. Throws IoError.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

}  // namespace geoprobe
