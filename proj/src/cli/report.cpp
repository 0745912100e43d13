#include "satlab/io/report.hpp"

#include <algorithm>
#include <map>

#include "commands.hpp"
#include "util.hpp"

namespace satlab::cli {

namespace {

bool is_report_csv(const std::filesystem::path& p) {
    if (p.extension() != ".csv") return false;
    const std::string text = read_text(p);
    const auto eol = text.find_first_of("\r\n");
    return text.substr(0, eol) == io::kCsvHeader;
}

}  // namespace

int cmd_report(const ReportOptions& opts) {
    check_format(opts.format, {"csv", "json"});
    if (!std::filesystem::is_directory(opts.in)) {
        throw Error(ErrorKind::IoFailure, "--in " + opts.in.string() + " is not a directory");
    }
    // Report files are CSVs with the report header, or files named report.json.
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(opts.in)) {
        if (!e.is_regular_file()) continue;
        const auto& p = e.path();
        if (p.filename() == "report.json" || is_report_csv(p)) files.push_back(p);
    }
    std::sort(files.begin(), files.end());

    std::vector<io::ReportRow> rows;
    std::map<std::string, std::filesystem::path> owner;
    for (const auto& f : files) {
        const std::string text = read_text(f);
        const auto part = f.extension() == ".json" ? io::parse_report_json(text) : io::parse_report_csv(text);
        for (const auto& r : part) {
            auto [it, fresh] = owner.emplace(r.run_id, f);
            if (!fresh && it->second != f) {
                throw Error(ErrorKind::DuplicateRunId,
                            "run_id '" + r.run_id + "' appears in " + it->second.string() + " and " + f.string());
            }
        }
        rows.insert(rows.end(), part.begin(), part.end());
    }
    emit(opts.out, io::emit_report(rows, opts.format == "json" ? io::ReportFormat::Json : io::ReportFormat::Csv));
    return kExitOk;
}

}  // namespace satlab::cli
