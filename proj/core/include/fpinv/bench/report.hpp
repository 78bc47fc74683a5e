#pragma once

#include <string>
#include <vector>

namespace fpinv::bench {

struct ReportRow {
    std::string scenario;
    std::string method;
    double guidance = 0.0;
    std::string metric;
    double value = 0.0;
    int trial = 0;
    double wall_time_s = 0.0;
    std::string config_hash;
};

/// Named residual history, serialized next to the rows.
struct TraceRecord {
    std::string label;
    std::string trace_json;
};

struct ExperimentReport {
    std::string experiment;
    std::string config_hash;
    std::string config_json;
    std::vector<ReportRow> rows;
    std::vector<TraceRecord> traces;
    /// One message per trial that threw; its rows are absent.
    std::vector<std::string> failures;

    /// Orders rows by (method, guidance, metric, trial).
    void sort_rows();

    /// Values of `metric` for `method` at `guidance`, ordered by trial.
    std::vector<double> values(const std::string& method, const std::string& metric, double guidance) const;
    std::vector<double> values(const std::string& method, const std::string& metric) const;
};

inline constexpr const char* kCsvHeader = "scenario,method,guidance,metric,value,trial,wall_time_s";

/// Full-precision CSV; an infinite PSNR is written as "exact".
std::string to_csv(const ExperimentReport& report);
std::vector<ReportRow> parse_csv(const std::string& text);
std::string to_json(const ExperimentReport& report);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace fpinv::bench
