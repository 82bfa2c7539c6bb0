#include "mvpa/report.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvpa/errors.hpp"

namespace mvpa {

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// report fields never contain commas or quotes by construction (subject ids,
// paradigm/region/analysis names); refuse rather than emit a broken file.
void check_field(const std::string& s) {
    for (char ch : s)
        if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r')
            throw InvalidArgument("report field contains a CSV delimiter: " + s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string utc_timestamp_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_report_csv(const Report& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open report file for writing: " + path);
    out << "# generated_at=" << report.generated_at << "\n";
    out << "subject,paradigm,region,analysis,metric,value\n";
    for (const auto& row : report.rows) {
        check_field(row.subject);
        check_field(row.paradigm);
        check_field(row.region);
        check_field(row.analysis);
        check_field(row.metric);
        out << row.subject << ',' << row.paradigm << ',' << row.region << ','
            << row.analysis << ',' << row.metric << ',' << format_value(row.value) << "\n";
    }
    if (!out) throw IoError("failed while writing report file: " + path);
}

void write_report_json(const Report& report, const std::string& path) {
    nlohmann::json doc;
    doc["seed"] = report.seed;
    doc["generated_at"] = report.generated_at;
    doc["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        doc["rows"].push_back({{"subject", row.subject},
                               {"paradigm", row.paradigm},
                               {"region", row.region},
                               {"analysis", row.analysis},
                               {"metric", row.metric},
                               {"value", row.value}});
    }
    doc["errors"] = nlohmann::json::array();
    for (const auto& err : report.errors) {
        doc["errors"].push_back({{"subject", err.subject},
                                 {"paradigm", err.paradigm},
                                 {"region", err.region},
                                 {"analysis", err.analysis},
                                 {"message", err.message}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open report file for writing: " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("failed while writing report file: " + path);
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report file: " + path);
    std::vector<ReportRow> rows;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "subject,paradigm,region,analysis,metric,value")
                throw FormatError(path + ": unexpected report header: " + line);
            header_seen = true;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 6)
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": expected 6 fields, got " + std::to_string(fields.size()));
        ReportRow row;
        row.subject = fields[0];
        row.paradigm = fields[1];
        row.region = fields[2];
        row.analysis = fields[3];
        row.metric = fields[4];
        try {
            std::size_t used = 0;
            row.value = std::stod(fields[5], &used);
            if (used != fields[5].size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": bad numeric value: " + fields[5]);
        }
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw FormatError(path + ": missing report header");
    return rows;
}

} // namespace mvpa
