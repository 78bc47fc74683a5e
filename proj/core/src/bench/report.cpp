#include "fpinv/bench/report.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include "fpinv/types.hpp"
#include "json.hpp"

namespace fpinv::bench {

void ExperimentReport::sort_rows() {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.method, a.guidance, a.metric, a.trial) < std::tie(b.method, b.guidance, b.metric, b.trial);
    });
}

std::vector<double> ExperimentReport::values(const std::string& method, const std::string& metric,
                                             double guidance) const {
    std::vector<std::pair<int, double>> hits;
    for (const auto& r : rows)
        if (r.method == method && r.metric == metric && r.guidance == guidance) hits.emplace_back(r.trial, r.value);
    std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(h.second);
    return out;
}

std::vector<double> ExperimentReport::values(const std::string& method, const std::string& metric) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.method == method && r.metric == metric) out.push_back(r.value);
    return out;
}

namespace {

std::string format_number(double v) {
    if (std::isinf(v) && v > 0) return "exact";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& s) {
    if (s == "exact") return std::numeric_limits<double>::infinity();
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(end != s.c_str() && *end == '\0' && errno == 0, "csv: bad number '" + s + "'");
    return v;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::string to_csv(const ExperimentReport& report) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : report.rows) {
        out += r.scenario + ',' + r.method + ',' + format_number(r.guidance) + ',' + r.metric + ',' +
               format_number(r.value) + ',' + std::to_string(r.trial) + ',' + format_number(r.wall_time_s) + '\n';
    }
    return out;
}

std::vector<ReportRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == kCsvHeader, "csv: missing or wrong header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = split_line(line);
        require(c.size() == 7, "csv: expected 7 columns in '" + line + "'");
        ReportRow r;
        r.scenario = c[0];
        r.method = c[1];
        r.guidance = parse_number(c[2]);
        r.metric = c[3];
        r.value = parse_number(c[4]);
        r.trial = static_cast<int>(parse_number(c[5]));
        r.wall_time_s = parse_number(c[6]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string to_json(const ExperimentReport& report) {
    using nlohmann::json;
    auto number = [](double v) { return std::isinf(v) ? json("exact") : json(v); };
    json j;
    j["experiment"] = report.experiment;
    j["config_hash"] = report.config_hash;
    j["config"] = report.config_json.empty() ? json::object() : json::parse(report.config_json);
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"scenario", r.scenario},
                        {"method", r.method},
                        {"guidance", r.guidance},
                        {"metric", r.metric},
                        {"value", number(r.value)},
                        {"trial", r.trial},
                        {"wall_time_s", r.wall_time_s},
                        {"config_hash", r.config_hash}});
    }
    j["rows"] = std::move(rows);
    json traces = json::array();
    for (const auto& t : report.traces) traces.push_back({{"label", t.label}, {"steps", json::parse(t.trace_json)}});
    j["traces"] = std::move(traces);
    j["failures"] = report.failures;
    return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fpinv::bench
