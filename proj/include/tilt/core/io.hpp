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

// Event stream files.
//
// JSONL: one object per line, {"start":int,"end":int,"payload":{...}}. A payload object
// with a single field reads as that field's scalar; more fields read as a struct. A bare
// scalar payload is also accepted.
//
// CSV: header `start,end,field1,field2,...`; the same single-field rule applies.

#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tilt/core/event.hpp"

namespace tilt::io {

class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Value from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
    if (j.is_number_float()) return Value::real(j.get<double>());
    if (j.is_object()) {
        std::vector<Value::Field> fields;
        for (const auto& [k, v] : j.items()) fields.emplace_back(k, from_json(v));
        return Value::structure(std::move(fields));
    }
    throw FormatError("unsupported JSON payload: " + j.dump());
}

inline nlohmann::json to_json(const Value& v) {
    switch (v.kind()) {
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::Int: return v.as_int();
    case ValueKind::Float: return v.as_float();
    case ValueKind::Struct: {
        nlohmann::json o = nlohmann::json::object();
        for (const auto& [k, f] : v.fields()) o[k] = to_json(f);
        return o;
    }
    case ValueKind::Phi: break;
    }
    throw FormatError("phi cannot be serialized as a payload");
}

inline Value payload_from_json(const nlohmann::json& j) {
    if (j.is_object() && j.size() == 1) return from_json(j.begin().value());
    return from_json(j);
}

inline Value parse_scalar(const std::string& tok) {
    if (tok.empty()) throw FormatError("empty CSV field");
    if (tok == "true") return Value::boolean(true);
    if (tok == "false") return Value::boolean(false);
    if (tok.find_first_of(".eEni") == std::string::npos) {
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), i);
        if (ec == std::errc() && p == tok.data() + tok.size()) return Value::integer(i);
    }
    double d = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
    if (ec != std::errc() || p != tok.data() + tok.size()) throw FormatError("bad CSV field '" + tok + "'");
    return Value::real(d);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string scalar_text(const Value& v) {
    if (v.kind() == ValueKind::Struct) throw FormatError("nested struct in CSV payload");
    return to_string(v);
}

} // namespace detail

inline std::vector<Event> read_jsonl(std::istream& in) {
    std::vector<Event> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            out.push_back({Time(j.at("start").get<Ticks>()), Time(j.at("end").get<Ticks>()),
                           detail::payload_from_json(j.at("payload"))});
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline void write_jsonl(std::ostream& out, std::span<const Event> events) {
    for (const Event& e : events) {
        nlohmann::json payload = e.payload.kind() == ValueKind::Struct ? detail::to_json(e.payload)
                                                                        : nlohmann::json{{"value", detail::to_json(e.payload)}};
        nlohmann::json j = {{"start", e.start.ticks()}, {"end", e.end.ticks()}, {"payload", payload}};
        out << j.dump() << '\n';
    }
}

inline std::vector<Event> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) return {};
    auto header = detail::split_csv(line);
    if (header.size() < 3 || header[0] != "start" || header[1] != "end") {
        throw FormatError("CSV header must be start,end,<fields...>");
    }
    std::vector<Event> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cols = detail::split_csv(line);
        if (cols.size() != header.size()) throw FormatError("line " + std::to_string(lineno) + ": column count mismatch");
        try {
            Time s(detail::parse_scalar(cols[0]).as_int());
            Time e(detail::parse_scalar(cols[1]).as_int());
            Value payload;
            if (header.size() == 3) {
                payload = detail::parse_scalar(cols[2]);
            } else {
                std::vector<Value::Field> fields;
                for (std::size_t k = 2; k < cols.size(); ++k) fields.emplace_back(header[k], detail::parse_scalar(cols[k]));
                payload = Value::structure(std::move(fields));
            }
            out.push_back({s, e, std::move(payload)});
        } catch (const EvalError& err) {
            throw FormatError("line " + std::to_string(lineno) + ": " + err.what());
        }
    }
    return out;
}

/// Column order follows the first event's struct fields; scalar payloads use `value`.
inline void write_csv(std::ostream& out, std::span<const Event> events) {
    std::vector<std::string> names;
    if (!events.empty() && events.front().payload.kind() == ValueKind::Struct) {
        for (const auto& [k, v] : events.front().payload.fields()) names.push_back(k);
    }
    out << "start,end";
    if (names.empty()) {
        out << ",value";
    } else {
        for (const auto& n : names) out << ',' << n;
    }
    out << '\n';
    for (const Event& e : events) {
        out << e.start.ticks() << ',' << e.end.ticks();
        if (names.empty()) {
            out << ',' << detail::scalar_text(e.payload);
        } else {
            for (const auto& n : names) out << ',' << detail::scalar_text(e.payload.field(n));
        }
        out << '\n';
    }
}

/// Reads by extension: `.csv` as CSV, anything else as JSONL.
inline std::vector<Event> read_events_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_csv(in);
    return read_jsonl(in);
}

} // namespace tilt::io
