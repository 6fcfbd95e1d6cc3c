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

// Data-parallel execution of a kernel over time partitions.
//
// The output domain (start, end] is tiled into partitions (Ts, Te] of a fixed interval.
// Each partition reads its inputs on (Ts - lookback, Te + lookahead], so partitions are
// independent: workers pull partition indices from one atomic counter, each writes only
// its own output slot, and the slots are concatenated in order once all workers join.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tilt/exec/kernel.hpp"

namespace tilt::runtime {

inline constexpr Ticks kDefaultInterval = Ticks{1} << 16;

struct Partition {
    std::size_t id = 0;
    /// Output range (ts, te].
    Time ts, te;
    /// Input views, each based at ts - lookback and covering through te + lookahead.
    exec::Inputs inputs;
};

/// A failure inside one partition; the whole run fails with it.
class ExecutionError : public std::runtime_error {
  public:
    ExecutionError(std::size_t partition, const std::string& what)
        : std::runtime_error("partition " + std::to_string(partition) + ": " + what), partition_(partition) {}

    [[nodiscard]] std::size_t partition() const { return partition_; }

  private:
    std::size_t partition_;
};

/// Tiles (start, end] into ceil((end - start) / interval) partitions. Throws CoverageError
/// when an input does not reach back far enough for the first partition.
inline std::vector<Partition> partition(const exec::Inputs& inputs, Time start, Time end, Ticks interval,
                                        const std::map<std::string, Ticks>& lookback,
                                        const std::map<std::string, Ticks>& lookahead = {}) {
    if (interval < 1) throw std::invalid_argument("partition interval must be at least 1");
    std::vector<Partition> parts;
    if (end <= start) return parts;
    auto extra = [](const std::map<std::string, Ticks>& m, const std::string& k) {
        auto it = m.find(k);
        return it == m.end() ? Ticks{0} : it->second;
    };
    const Ticks span = end.ticks() - start.ticks();
    const Ticks n = span / interval + (span % interval ? 1 : 0);
    parts.reserve(static_cast<std::size_t>(n));
    for (Ticks i = 0; i < n; ++i) {
        Partition p;
        p.id = static_cast<std::size_t>(i);
        p.ts = Time(start.ticks() + i * interval);
        p.te = Time(std::min(end.ticks(), p.ts.ticks() + interval));
        for (const auto& [name, view] : inputs) {
            Time from(p.ts.ticks() - extra(lookback, name));
            Time to(p.te.ticks() + extra(lookahead, name));
            p.inputs[name] = view.slice(from, to);
        }
        parts.push_back(std::move(p));
    }
    return parts;
}

namespace detail {

/// One output slot per partition. Workers claim partitions through a shared counter; the
/// first failing partition, in partition order, fails the run.
inline std::vector<SnapshotBuffer> run_all(const exec::KernelPlan& plan, const std::vector<Partition>& parts,
                                           int threads, exec::KernelStats* stats) {
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
    std::vector<SnapshotBuffer> slots(parts.size());
    std::vector<std::exception_ptr> errors(parts.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(threads), parts.size()));
    std::vector<exec::KernelStats> local(workers);
    std::atomic<std::size_t> next{0};
    auto work = [&](std::size_t w) {
        for (std::size_t i = next.fetch_add(1, std::memory_order_relaxed); i < parts.size();
             i = next.fetch_add(1, std::memory_order_relaxed)) {
            try {
                slots[i] = plan.run(parts[i].inputs, parts[i].ts, parts[i].te, stats ? &local[w] : nullptr);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
        work(0);
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw ExecutionError(parts[i].id, e.what());
        } catch (...) {
            throw ExecutionError(parts[i].id, "unknown failure");
        }
    }
    if (stats) {
        for (const auto& l : local) {
            for (const auto& [k, v] : l.iterations) stats->iterations[k] += v;
        }
    }
    return slots;
}

} // namespace detail

/// Runs `plan` on every partition with `threads` workers and concatenates the outputs in
/// partition order. Iteration counts are summed into `stats` when given.
inline SnapshotBuffer execute_parallel(const exec::KernelPlan& plan, const std::vector<Partition>& parts,
                                       int threads, exec::KernelStats* stats = nullptr) {
    if (parts.empty()) return SnapshotBuffer();
    return concat(detail::run_all(plan, parts, threads, stats));
}

/// One independent query instance per key group, all groups sharing one worker pool.
/// Returns the outputs in group order; failures name the flattened partition index.
inline std::vector<SnapshotBuffer> execute_keyed(const exec::KernelPlan& plan,
                                                 const std::vector<std::vector<Partition>>& groups, int threads,
                                                 exec::KernelStats* stats = nullptr) {
    std::vector<Partition> flat;
    std::vector<std::size_t> first{0};
    for (const auto& g : groups) {
        for (const auto& p : g) {
            flat.push_back(p);
            flat.back().id = flat.size() - 1;
        }
        first.push_back(flat.size());
    }
    auto slots = detail::run_all(plan, flat, threads, stats);
    std::vector<SnapshotBuffer> out;
    out.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        out.push_back(concat(std::span<const SnapshotBuffer>(slots.data() + first[g], first[g + 1] - first[g])));
    }
    return out;
}

/// Union of per-key outputs as one multiset-valued buffer.
inline SnapshotBuffer merge_keyed(std::span<const SnapshotBuffer> outputs, Time base) {
    std::vector<Event> all;
    for (const auto& o : outputs) {
        auto ev = ssbuf_to_events(o);
        all.insert(all.end(), ev.begin(), ev.end());
    }
    std::stable_sort(all.begin(), all.end(), [](const Event& a, const Event& b) { return a.start < b.start; });
    return events_to_ssbuf(all, base);
}

struct RunReport {
    std::string bench;
    std::uint64_t events = 0;
    /// Mean wall-clock seconds over the repeats.
    double seconds = 0;
    /// Standard deviation of the per-run seconds.
    double stddev = 0;
    /// events / seconds.
    double throughput = 0;
    int threads = 1;
    Ticks interval = kDefaultInterval;
    std::vector<double> runs;
};

inline RunReport make_report(std::string bench, std::uint64_t events, int threads, Ticks interval,
                             std::vector<double> runs) {
    RunReport r;
    r.bench = std::move(bench);
    r.events = events;
    r.threads = threads;
    r.interval = interval;
    r.runs = std::move(runs);
    if (!r.runs.empty()) {
        const double n = static_cast<double>(r.runs.size());
        r.seconds = std::accumulate(r.runs.begin(), r.runs.end(), 0.0) / n;
        double var = 0;
        for (double s : r.runs) var += (s - r.seconds) * (s - r.seconds);
        r.stddev = std::sqrt(var / n);
    }
    r.throughput = r.seconds > 0 ? static_cast<double>(r.events) / r.seconds : 0.0;
    return r;
}

/// Times `repeat` executions over resident inputs and reports the mean.
inline RunReport measure(const exec::KernelPlan& plan, const std::vector<Partition>& parts, int threads,
                         std::uint64_t events, int repeat = 5, Ticks interval = kDefaultInterval,
                         std::string bench = {}) {
    if (repeat < 1) throw std::invalid_argument("repeat must be at least 1");
    std::vector<double> runs;
    for (int r = 0; r < repeat; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        auto out = execute_parallel(plan, parts, threads);
        auto t1 = std::chrono::steady_clock::now();
        runs.push_back(std::chrono::duration<double>(t1 - t0).count());
        (void)out;
    }
    return make_report(std::move(bench), events, threads, interval, std::move(runs));
}

} // namespace tilt::runtime
