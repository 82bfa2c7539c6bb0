#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mvpa {

// One scalar result from one analysis on one subject/paradigm/region cell.
struct ReportRow {
    std::string subject;
    std::string paradigm;
    std::string region;
    std::string analysis;
    std::string metric;
    double value = 0.0;
};

// A task that failed; the run records it and keeps going.
struct ReportError {
    std::string subject;
    std::string paradigm;
    std::string region;
    std::string analysis;
    std::string message;
};

struct Report {
    std::uint64_t seed = 0;
    std::string generated_at;
    std::vector<ReportRow> rows;
    std::vector<ReportError> errors;
};

// Timestamp in UTC, e.g. "2024-05-01T12:00:00Z".
std::string utc_timestamp_now();

void write_report_csv(const Report& report, const std::string& path);
void write_report_json(const Report& report, const std::string& path);

// Reads rows from a CSV written by write_report_csv (comment lines skipped).
std::vector<ReportRow> read_report_csv(const std::string& path);

} // namespace mvpa
