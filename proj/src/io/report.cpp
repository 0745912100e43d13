#include "satlab/io/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <json.hpp>
#include <tuple>

#include "satlab/error.hpp"

namespace satlab::io {

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Saturation: return "saturation";
        case Metric::ProbeAccuracy: return "probe_accuracy";
        case Metric::Rf: return "rf";
        case Metric::Loss: return "loss";
        case Metric::Accuracy: return "accuracy";
    }
    return "?";
}

Metric parse_metric(std::string_view text) {
    for (auto m : {Metric::Saturation, Metric::ProbeAccuracy, Metric::Rf, Metric::Loss, Metric::Accuracy}) {
        if (to_string(m) == text) return m;
    }
    throw Error(ErrorKind::InvalidRow, "unknown metric '" + std::string(text) + "'");
}

void validate_row(const ReportRow& row) {
    if (!std::isfinite(row.value)) {
        throw Error(ErrorKind::InvalidRow, "non-finite " + std::string(to_string(row.metric)) + " for " + row.run_id +
                                               "/" + row.layer);
    }
    const bool unit = row.metric == Metric::Saturation || row.metric == Metric::ProbeAccuracy ||
                      row.metric == Metric::Accuracy;
    if (unit && (row.value < 0.0 || row.value > 1.0)) {
        throw Error(ErrorKind::InvalidRow, std::string(to_string(row.metric)) + " outside [0,1] for " + row.run_id +
                                               "/" + row.layer);
    }
    if (row.metric == Metric::Rf && row.value < 1.0) throw Error(ErrorKind::InvalidRow, "receptive field below 1");
}

void sort_rows(std::vector<ReportRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        const long ea = a.epoch.value_or(-1);
        const long eb = b.epoch.value_or(-1);
        return std::tie(a.run_id, ea, a.layer) < std::tie(b.run_id, eb, b.layer);
    });
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// RFC-4180 record splitter; returns records of fields.
std::vector<std::vector<std::string>> split_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                fields.push_back(std::move(field));
                records.push_back(std::move(fields));
            }
            fields.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw Error(ErrorKind::ParseError, "unterminated quoted CSV field");
    if (any || !field.empty()) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
    }
    return records;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw Error(ErrorKind::ParseError, "not a number: '" + s + "'");
    }
    return v;
}

}  // namespace

std::string emit_report(std::span<const ReportRow> rows, ReportFormat format) {
    std::vector<ReportRow> sorted(rows.begin(), rows.end());
    for (const auto& r : sorted) validate_row(r);
    sort_rows(sorted);

    if (format == ReportFormat::Json) {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& r : sorted) {
            nlohmann::ordered_json o;
            o["run_id"] = r.run_id;
            o["layer"] = r.layer;
            o["metric"] = std::string(to_string(r.metric));
            o["epoch"] = r.epoch ? nlohmann::ordered_json(*r.epoch) : nlohmann::ordered_json(nullptr);
            o["value"] = r.value;
            j.push_back(std::move(o));
        }
        return j.dump(2) + "\n";
    }

    std::string out(kCsvHeader);
    out += "\n";
    for (const auto& r : sorted) {
        out += csv_field(r.run_id);
        out += ',';
        out += csv_field(r.layer);
        out += ',';
        out += to_string(r.metric);
        out += ',';
        if (r.epoch) out += std::to_string(*r.epoch);
        out += ',';
        out += format_double(r.value);
        out += '\n';
    }
    return out;
}

std::vector<ReportRow> parse_report_csv(std::string_view text) {
    const auto records = split_csv(text);
    if (records.empty()) throw Error(ErrorKind::ParseError, "report has no header");
    std::string header;
    for (std::size_t i = 0; i < records[0].size(); ++i) header += (i ? "," : "") + records[0][i];
    if (header != kCsvHeader) throw Error(ErrorKind::ParseError, "unexpected report header '" + header + "'");
    std::vector<ReportRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i];
        if (f.size() != 5) {
            throw Error(ErrorKind::ParseError, "report line " + std::to_string(i + 1) + " has " +
                                                   std::to_string(f.size()) + " fields");
        }
        ReportRow r;
        r.run_id = f[0];
        r.layer = f[1];
        r.metric = parse_metric(f[2]);
        if (!f[3].empty()) r.epoch = static_cast<long>(parse_double(f[3]));
        r.value = parse_double(f[4]);
        validate_row(r);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ReportRow> parse_report_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    if (!j.is_array()) throw Error(ErrorKind::ParseError, "report JSON must be an array");
    std::vector<ReportRow> rows;
    for (const auto& o : j) {
        ReportRow r;
        try {
            r.run_id = o.at("run_id").get<std::string>();
            r.layer = o.at("layer").get<std::string>();
            r.metric = parse_metric(o.at("metric").get<std::string>());
            if (!o.at("epoch").is_null()) r.epoch = o.at("epoch").get<long>();
            r.value = o.at("value").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::MissingField, e.what());
        }
        validate_row(r);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace satlab::io
