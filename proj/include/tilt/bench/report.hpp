// Copyright 2026 the tilt-engine authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Report files: CSV rows under a fixed header, or whitespace-separated columns for
// plotting tools. Appending never repeats the header.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilt/core/io.hpp"
#include "tilt/runtime/parallel.hpp"

namespace tilt::bench {

enum class ReportFormat : std::uint8_t { Csv, Dat };

inline constexpr const char* kReportColumns[] = {"bench", "threads", "interval", "events", "seconds", "throughput"};

class ReportError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Shortest digits that read back to the same double.
inline std::string number(double x) {
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

} // namespace detail

/// Column names; dat headers are comment lines.
inline std::string report_header(ReportFormat f) {
    std::string out = f == ReportFormat::Dat ? "#" : "";
    for (std::size_t i = 0; i < std::size(kReportColumns); ++i) {
        out += (i == 0 ? (f == ReportFormat::Dat ? " " : "") : (f == ReportFormat::Csv ? "," : " "));
        out += kReportColumns[i];
    }
    return out;
}

inline std::string format_row(const runtime::RunReport& r, ReportFormat f = ReportFormat::Csv) {
    const char sep = f == ReportFormat::Csv ? ',' : ' ';
    std::ostringstream out;
    out << r.bench << sep << r.threads << sep << r.interval << sep << r.events << sep << detail::number(r.seconds)
        << sep << detail::number(r.throughput);
    return out.str();
}

/// Appends one row per report to `path`, writing the header first when the file is new
/// or empty.
inline void emit_report(const std::vector<runtime::RunReport>& reports, const std::string& path,
                        ReportFormat f = ReportFormat::Csv) {
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw ReportError("cannot write report to " + path);
    if (fresh) out << report_header(f) << '\n';
    for (const auto& r : reports) out << format_row(r, f) << '\n';
    out.flush();
    if (!out) throw ReportError("failed writing report to " + path);
}

/// Reads rows written in either format; header and comment lines are skipped. Only the
/// columns present in a row are restored, so per-run timings are empty.
inline std::vector<runtime::RunReport> parse_report(std::istream& in) {
    std::vector<runtime::RunReport> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("bench,", 0) == 0) continue;
        std::vector<std::string> cols;
        if (line.find(',') != std::string::npos) {
            cols = io::detail::split_csv(line);
        } else {
            std::istringstream words(line);
            for (std::string w; words >> w;) cols.push_back(w);
        }
        if (cols.size() != std::size(kReportColumns)) {
            throw ReportError("line " + std::to_string(lineno) + ": expected " +
                              std::to_string(std::size(kReportColumns)) + " columns");
        }
        try {
            runtime::RunReport r;
            r.bench = cols[0];
            r.threads = std::stoi(cols[1]);
            r.interval = std::stoll(cols[2]);
            r.events = std::stoull(cols[3]);
            r.seconds = std::stod(cols[4]);
            r.throughput = std::stod(cols[5]);
            out.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw ReportError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace tilt::bench
