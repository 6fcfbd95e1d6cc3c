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

// Benchmark registry: the query graph of every benchmark, the streams it reads, and the
// operator inventory it must exhibit.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilt/bench/generators.hpp"
#include "tilt/frontend/graph.hpp"
#include "tilt/ir/functions.hpp"

namespace tilt::bench {

class RegistryError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// One graph input and the synthetic stream that feeds it.
struct InputSpec {
    std::string name;
    StreamParams stream;
};

struct BenchSpec {
    std::string name;
    std::string summary;
    std::function<frontend::Graph()> build;
    std::vector<InputSpec> inputs;
    /// Operator inventory as "Kind (n), Kind, ...": a count is exact, no count means at least one.
    std::string operators;
    /// Keyed benchmarks run one query instance per value of this struct field.
    std::optional<std::string> key_field;
    /// Field carried into each keyed instance.
    std::string value_field;
};

/// Kind -> exact count, or nullopt for "at least one".
using Inventory = std::map<std::string, std::optional<int>>;

/// Parses "Avg (2), Join, Where" style listings.
inline Inventory parse_inventory(const std::string& listing) {
    Inventory out;
    std::size_t pos = 0;
    auto trim = [](std::string s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        std::size_t i = 0;
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        return s.substr(i);
    };
    while (pos <= listing.size()) {
        std::size_t comma = listing.find(',', pos);
        std::string item = trim(listing.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (!item.empty()) {
            std::optional<int> count;
            if (auto open = item.find('('); open != std::string::npos) {
                auto close = item.find(')', open);
                if (close == std::string::npos) throw std::invalid_argument("unbalanced count in '" + item + "'");
                count = std::stoi(item.substr(open + 1, close - open - 1));
                item = trim(item.substr(0, open));
            }
            if (out.count(item)) throw std::invalid_argument("operator '" + item + "' listed twice");
            out[item] = count;
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

/// Tag -> number of nodes carrying it; untagged helper nodes are not operators.
inline std::map<std::string, int> operator_counts(const frontend::Graph& g) {
    std::map<std::string, int> out;
    for (const auto& n : g.nodes()) {
        if (n.kind != frontend::OpKind::Input && !n.tag.empty()) out[n.tag]++;
    }
    return out;
}

/// Empty when `g` exhibits `listing` exactly; otherwise one line per discrepancy.
inline std::vector<std::string> inventory_mismatches(const frontend::Graph& g, const std::string& listing) {
    std::vector<std::string> out;
    const Inventory want = parse_inventory(listing);
    const auto have = operator_counts(g);
    for (const auto& [kind, count] : want) {
        auto it = have.find(kind);
        const int n = it == have.end() ? 0 : it->second;
        if (count ? n != *count : n < 1) {
            out.push_back(kind + ": expected " + (count ? std::to_string(*count) : std::string("at least 1")) +
                          ", found " + std::to_string(n));
        }
    }
    for (const auto& [kind, n] : have) {
        if (!want.count(kind)) out.push_back(kind + ": not expected, found " + std::to_string(n));
    }
    return out;
}

namespace detail {

using frontend::in;
using frontend::JoinKind;
using frontend::left;
using frontend::right;
using ir::call;
using ir::field;
using ir::lit;

inline ir::Expr max_(ir::Expr a, ir::Expr b) { return ir::binary(BinaryOp::Max, std::move(a), std::move(b)); }

/// Scalar functions the benchmark queries call. Idempotent.
inline void register_functions() {
    static const bool done = [] {
        auto& reg = ir::FunctionRegistry::global();
        // (mean square, peak) -> {rms, crest}; a silent window has crest 0.
        reg.add({"vib_pair", 2, [](std::span<const Value> a) {
                     const double rms = std::sqrt(a[0].as_number());
                     const double crest = rms > 0 ? a[1].as_number() / rms : 0.0;
                     return Value::structure({{"rms", Value::real(rms)}, {"crest", Value::real(crest)}});
                 }});
        reg.add({"vib_report", 2, [](std::span<const Value> a) {
                     return Value::structure({{"rms", a[0].field("rms")},
                                              {"crest", a[0].field("crest")},
                                              {"kurtosis", a[1]}});
                 }});
        reg.add({"ysb_project", 1, [](std::span<const Value> a) {
                     return Value::structure({{"user_id", a[0].field("user_id")},
                                              {"ad_id", a[0].field("ad_id")},
                                              {"event_type", a[0].field("event_type")}});
                 }});
        return true;
    }();
    (void)done;
}

inline frontend::Graph select_query() {
    frontend::Graph g;
    g.set_output(g.select(g.input("x"), in() * lit(2.0) + lit(1.0), "scaled"));
    return g;
}

inline frontend::Graph where_query() {
    frontend::Graph g;
    g.set_output(g.where(g.input("x"), in() > lit(500.0), "large"));
    return g;
}

inline frontend::Graph windowsum_query() {
    frontend::Graph g;
    g.set_output(g.window(g.input("x"), "sum", 10, 5, nullptr, "wsum"));
    return g;
}

inline frontend::Graph join_query() {
    frontend::Graph g;
    auto l = g.input("l"), r = g.input("r");
    g.set_output(g.join(l, r, left() + right(), JoinKind::Inner, "sum"));
    return g;
}

inline frontend::Graph ysb_query() {
    frontend::Graph g;
    auto events = g.input("events", ir::Schema::record({{"user_id", ValueKind::Int},
                                                        {"page_id", ValueKind::Int},
                                                        {"ad_id", ValueKind::Int},
                                                        {"event_type", ValueKind::Int}}));
    auto projected = g.select(events, call("ysb_project", {in()}), "projected");
    auto views = g.where(projected, ir::eq(field(in(), "event_type"), ir::lit_int(0)), "views");
    g.set_output(g.window(views, "count", 10000, 10000, nullptr, "view_count"));
    return g;
}

/// Relative strength index over 14-tick average gains and losses.
inline frontend::Graph rsi_query() {
    frontend::Graph g;
    auto price = g.input("stock");
    auto prev = g.shift(price, 1, "prev");
    auto change = g.join(price, prev, left() - right(), JoinKind::Inner, "change");
    auto gain = g.window(change, "avg", 14, 1, max_(in(), lit(0.0)), "gain", "Avg");
    auto loss = g.window(change, "avg", 14, 1, max_(lit(0.0) - in(), lit(0.0)), "loss", "Avg");
    g.set_output(g.join(gain, loss,
                        ir::if_(ir::eq(right(), lit(0.0)), lit(100.0),
                                lit(100.0) - lit(100.0) / (lit(1.0) + left() / right())),
                        JoinKind::Inner, "rsi"));
    return g;
}

/// (x - mean) / stddev per 10 s tumbling window; a window of equal values gives 0.
inline frontend::Graph norm_query() {
    frontend::Graph g;
    auto x = g.input("x");
    auto mean = g.window(x, "avg", 10000, 10000, nullptr, "mean");
    auto sd = g.window(x, "stddev", 10000, 10000, nullptr, "sd");
    auto centred = g.join(x, mean, left() - right(), JoinKind::Inner, "centred");
    g.set_output(g.join(centred, sd, ir::if_(right() > lit(0.0), left() / right(), lit(0.0)), JoinKind::Inner,
                        "normalized"));
    return g;
}

/// Fills gaps with the average of the 10 s tumbling window the gap falls in. The output is
/// delayed by one window so that it only depends on windows that have closed.
inline frontend::Graph impute_query() {
    frontend::Graph g;
    auto x = g.input("signal");
    auto mean = g.window(x, "avg", 10000, 10000, nullptr, "window_mean");
    auto filled = g.join(mean, x, ir::if_(ir::is_phi(right()), left(), right()), JoinKind::Left, "filled");
    g.set_output(g.shift(filled, 10000, "imputed"));
    return g;
}

/// Upsamples a 250 Hz stream to 1 kHz by linear interpolation between consecutive samples.
inline frontend::Graph resample_query() {
    frontend::Graph g;
    auto x = g.input("x");
    auto sampled = g.chop(x, 4, "sampled");
    auto prev = g.shift(sampled, 4, "prev");
    auto pairs = g.join(prev, sampled, call("pair", {left(), right()}), JoinKind::Inner, "pairs");
    // Weight 1/4 one tick into a sample period, reaching 1 at the sample itself.
    auto weight = ir::unary(UnaryOp::ToFloat,
                            ir::binary(BinaryOp::Mod, ir::t() + ir::lit_int(3), ir::lit_int(4)) + ir::lit_int(1)) /
                  lit(4.0);
    g.set_output(g.select(pairs, call("lerp", {field(in(), "first"), field(in(), "second"), weight}), "resampled"));
    return g;
}

/// QRS detection stages: low-pass and high-pass filters, derivative, squaring and a 150 ms
/// moving-window integration.
inline frontend::Graph pantom_query() {
    frontend::Graph g;
    auto ecg = g.input("ecg");
    auto low = g.window(ecg, "pt_lowpass", 11, 1, nullptr, "lowpass");
    auto high = g.window(low, "pt_highpass", 32, 1, nullptr, "highpass");
    auto slope = g.window(high, "pt_derivative", 5, 1, nullptr, "derivative");
    auto squared = g.select(slope, ir::unary(UnaryOp::Square, in()), "squared");
    g.set_output(g.window(squared, "avg", 150, 1, nullptr, "integrated"));
    return g;
}

/// RMS, crest factor and kurtosis of a smoothed signal per 100 ms tumbling window.
inline frontend::Graph vibration_query() {
    frontend::Graph g;
    auto raw = g.input("vib");
    auto smooth = g.window(raw, "avg", 4, 1, nullptr, "smooth");
    auto mean_square = g.window(smooth, "avg", 100, 100, ir::unary(UnaryOp::Square, in()), "mean_square");
    auto peak = g.window(smooth, "max", 100, 100, ir::unary(UnaryOp::Abs, in()), "peak");
    auto kurt = g.window(smooth, "kurtosis", 100, 100, nullptr, "kurt");
    auto level = g.join(mean_square, peak, call("vib_pair", {left(), right()}), JoinKind::Inner, "level");
    g.set_output(g.join(level, kurt, call("vib_report", {left(), right()}), JoinKind::Inner, "report"));
    return g;
}

/// Flags a transaction above the previous tick's mean + 3 sigma over the last 30 ticks.
inline frontend::Graph fraud_query() {
    frontend::Graph g;
    auto amount = g.input("amount");
    auto mean = g.window(amount, "avg", 30, 1, nullptr, "mean");
    auto sd = g.window(amount, "stddev", 30, 1, nullptr, "sd");
    auto threshold = g.join(mean, sd, left() + lit(3.0) * right(), JoinKind::Inner, "threshold");
    auto prior = g.shift(threshold, 1, "prior");
    g.set_output(g.join(amount, prior, ir::if_(left() > right(), left(), ir::phi()), JoinKind::Inner, "flagged"));
    return g;
}

inline StreamParams stream(StreamKind kind, int freq_hz = 1000, double dropout = 0.0) {
    return {kind, freq_hz, dropout, 8};
}

inline std::vector<BenchSpec> make_registry() {
    register_functions();
    std::vector<BenchSpec> r;
    r.push_back({"select", "pointwise x * 2 + 1", select_query, {{"x", stream(StreamKind::Uniform)}}, "Select", {}, {}});
    r.push_back({"where", "filter x > 500", where_query, {{"x", stream(StreamKind::Uniform)}}, "Where", {}, {}});
    r.push_back({"windowsum", "sum over 10 ticks every 5", windowsum_query, {{"x", stream(StreamKind::Uniform)}},
                 "Sum", {}, {}});
    r.push_back({"join", "inner join of two streams", join_query,
                 {{"l", stream(StreamKind::Uniform)}, {"r", stream(StreamKind::Uniform)}}, "Join", {}, {}});
    r.push_back({"ysb", "ad views per 10 s tumbling window", ysb_query, {{"events", stream(StreamKind::Clicks)}},
                 "Select, Where, Count", {}, {}});
    r.push_back({"trend", "short and long moving averages joined and filtered",
                 [] { return frontend::build_trend_query("stock"); }, {{"stock", stream(StreamKind::PriceWalk)}},
                 "Avg (2), Join, Where", {}, {}});
    r.push_back({"rsi", "14-tick relative strength index", rsi_query, {{"stock", stream(StreamKind::PriceWalk)}},
                 "Shift, Join, Avg (2)", {}, {}});
    r.push_back({"norm", "z-score per 10 s tumbling window", norm_query, {{"x", stream(StreamKind::Uniform)}},
                 "Avg, StdDev, Join", {}, {}});
    r.push_back({"impute", "gap filling with the window average", impute_query,
                 {{"signal", stream(StreamKind::Signal, 1000, 0.002)}}, "Avg, Shift, Join", {}, {}});
    r.push_back({"resample", "250 Hz to 1 kHz linear interpolation", resample_query,
                 {{"x", stream(StreamKind::Uniform, 250)}}, "Select, Join, Shift, Chop", {}, {}});
    r.push_back({"pantom", "QRS detection filter stages", pantom_query, {{"ecg", stream(StreamKind::Signal)}},
                 "Custom-Agg (3), Select, Avg", {}, {}});
    r.push_back({"vibration", "bearing vibration features per 100 ms", vibration_query,
                 {{"vib", stream(StreamKind::Vibration)}}, "Max, Avg (2), Join (2), Custom-Agg", {}, {}});
    r.push_back({"fraud", "per-card amount above mean + 3 sigma", fraud_query,
                 {{"amount", stream(StreamKind::Transactions)}}, "Avg, StdDev, Shift, Join", "key", "amount"});
    return r;
}

} // namespace detail

inline const std::vector<BenchSpec>& benchmarks() {
    static const std::vector<BenchSpec> all = detail::make_registry();
    return all;
}

inline std::vector<std::string> benchmark_names() {
    std::vector<std::string> out;
    for (const auto& b : benchmarks()) out.push_back(b.name);
    return out;
}

inline const BenchSpec& find_benchmark(const std::string& name) {
    for (const auto& b : benchmarks()) {
        if (b.name == name) return b;
    }
    std::string list;
    for (const auto& n : benchmark_names()) list += (list.empty() ? "" : ", ") + n;
    throw RegistryError("unknown benchmark '" + name + "'; valid names: " + list);
}

inline frontend::Graph build_benchmark(const std::string& name) { return find_benchmark(name).build(); }

} // namespace tilt::bench
