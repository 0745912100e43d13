#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace satlab::io {

enum class Metric { Saturation, ProbeAccuracy, Rf, Loss, Accuracy };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view text);

/// One long-format observation. Epoch-level metrics use the layer names
/// "train" and "val"; the average saturation row uses layer "mean".
struct ReportRow {
    std::string run_id;
    std::string layer;
    Metric metric = Metric::Saturation;
    std::optional<long> epoch;
    double value = 0.0;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

enum class ReportFormat { Csv, Json };

inline constexpr std::string_view kCsvHeader = "run_id,layer,metric,epoch,value";

/// Throws InvalidRow for non-finite values or out-of-range accuracies.
void validate_row(const ReportRow& row);

/// Stable sort by (run_id, epoch, layer); rows without an epoch come first.
void sort_rows(std::vector<ReportRow>& rows);

/// Validates and sorts a copy, then serializes.
std::string emit_report(std::span<const ReportRow> rows, ReportFormat format);

std::vector<ReportRow> parse_report_csv(std::string_view text);
std::vector<ReportRow> parse_report_json(std::string_view text);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace satlab::io
