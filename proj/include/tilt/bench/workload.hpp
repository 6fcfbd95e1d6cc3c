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

// Resident input data for a benchmark and the helpers that compile, run and cross-check
// its query over that data.

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tilt/bench/registry.hpp"
#include "tilt/core/io.hpp"
#include "tilt/exec/dense.hpp"
#include "tilt/passes/pipeline.hpp"
#include "tilt/runtime/parallel.hpp"

namespace tilt::bench {

/// Input buffers start this far before tick 0, which covers every registered lookback.
inline constexpr Ticks kHistory = Ticks{1} << 20;

/// Input buffers for one query instance per key group; unkeyed benchmarks have one group.
struct Dataset {
    /// Output domain (0, end].
    Ticks end = 0;
    std::uint64_t events = 0;
    std::vector<std::map<std::string, SnapshotBuffer>> groups;

    [[nodiscard]] std::vector<exec::Inputs> views() const {
        std::vector<exec::Inputs> out;
        for (const auto& g : groups) {
            exec::Inputs in;
            for (const auto& [k, b] : g) in[k] = b.view();
            out.push_back(std::move(in));
        }
        return out;
    }
};

/// Builds the dataset from raw events per graph input. Keyed benchmarks split their single
/// input by the key field.
inline Dataset make_dataset(const BenchSpec& spec, const std::map<std::string, std::vector<Event>>& events) {
    Dataset d;
    const Time base(-kHistory);
    for (const auto& in : spec.inputs) {
        auto it = events.find(in.name);
        if (it == events.end()) throw std::invalid_argument(spec.name + " needs events for input '" + in.name + "'");
        d.events += it->second.size();
        for (const Event& e : it->second) d.end = std::max(d.end, e.end.ticks());
    }
    if (spec.key_field) {
        const auto& only = spec.inputs.front().name;
        for (auto& group : split_by_key(events.at(only), *spec.key_field, spec.value_field)) {
            d.groups.push_back({{only, events_to_ssbuf(group, base)}});
        }
    } else {
        d.groups.emplace_back();
        for (const auto& in : spec.inputs) d.groups.back()[in.name] = events_to_ssbuf(events.at(in.name), base);
    }
    return d;
}

/// `events` synthetic events per input. Each input draws from its own seed.
inline Dataset synthetic_dataset(const BenchSpec& spec, std::uint64_t events, std::uint64_t seed) {
    std::map<std::string, std::vector<Event>> raw;
    std::uint64_t salt = 0;
    for (const auto& in : spec.inputs) {
        const Ticks duration = static_cast<Ticks>(events) * event_width(in.stream.freq_hz);
        raw[in.name] = gen_synthetic(in.stream, duration, seed * 0x9E3779B97F4A7C15ull + salt++);
    }
    return make_dataset(spec, raw);
}

/// Events from a CSV or JSONL file for a single-input benchmark.
inline Dataset file_dataset(const BenchSpec& spec, const std::string& path) {
    if (spec.inputs.size() != 1) {
        throw std::invalid_argument(spec.name + " reads " + std::to_string(spec.inputs.size()) +
                                    " inputs; file ingestion supports single-input benchmarks");
    }
    return make_dataset(spec, {{spec.inputs.front().name, io::read_events_file(path)}});
}

struct Prepared {
    passes::Compiled compiled;
    exec::KernelPlan plan;
};

inline Prepared prepare(const BenchSpec& spec, const passes::CompileOptions& opts = {},
                        const exec::KernelOptions& kopts = {}) {
    auto c = passes::compile(spec.build(), opts);
    auto plan = exec::synthesize_kernel(c.final, kopts);
    return {std::move(c), std::move(plan)};
}

inline std::vector<std::vector<runtime::Partition>> partitions(const Prepared& p, const std::vector<exec::Inputs>& in,
                                                               Ticks end, Ticks interval) {
    std::vector<std::vector<runtime::Partition>> out;
    for (const auto& g : in) {
        out.push_back(runtime::partition(g, Time(0), Time(end), interval, p.compiled.final.lookback,
                                         p.compiled.final.lookahead));
    }
    return out;
}

/// Kernel output per group over (0, end], partitioned and run on `threads` workers.
inline std::vector<SnapshotBuffer> run_kernel(const Prepared& p, const Dataset& d, int threads, Ticks interval,
                                              exec::KernelStats* stats = nullptr) {
    const auto in = d.views();
    return runtime::execute_keyed(p.plan, partitions(p, in, d.end, interval), threads, stats);
}

/// Kernel output per group from one unpartitioned sequential run.
inline std::vector<SnapshotBuffer> run_sequential(const Prepared& p, const Dataset& d,
                                                  exec::KernelStats* stats = nullptr) {
    std::vector<SnapshotBuffer> out;
    for (const auto& in : d.views()) out.push_back(p.plan.run(in, Time(0), Time(d.end), stats));
    return out;
}

/// Dense per-tick evaluation of the unfused query, per group.
inline std::vector<SnapshotBuffer> run_oracle(const Prepared& p, const Dataset& d) {
    std::vector<SnapshotBuffer> out;
    for (const auto& in : d.views()) out.push_back(exec::eval_dense(p.compiled.resolved, in, Time(0), Time(d.end)));
    return out;
}

/// Index of the first group whose buffers differ, or -1.
inline int first_difference(const std::vector<SnapshotBuffer>& a, const std::vector<SnapshotBuffer>& b) {
    if (a.size() != b.size()) return 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] == b[i])) return static_cast<int>(i);
    }
    return -1;
}

/// Times `repeat` partitioned runs over the resident dataset.
inline runtime::RunReport measure(const std::string& bench, const Prepared& p, const Dataset& d, int threads,
                                  Ticks interval, int repeat) {
    if (repeat < 1) throw std::invalid_argument("repeat must be at least 1");
    const auto in = d.views();
    const auto groups = partitions(p, in, d.end, interval);
    std::vector<double> runs;
    for (int r = 0; r < repeat; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        auto out = runtime::execute_keyed(p.plan, groups, threads);
        auto t1 = std::chrono::steady_clock::now();
        runs.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    return runtime::make_report(bench, d.events, threads, interval, std::move(runs));
}

} // namespace tilt::bench
