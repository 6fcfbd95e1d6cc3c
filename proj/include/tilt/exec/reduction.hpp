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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tilt/core/snapshot_buffer.hpp"

namespace tilt {

/// Working state of a reduction. `count` is owned by the framework: it is the number of
/// non-phi values currently folded in. Specs keep running moments in `m`, and
/// order-dependent specs keep the folded values themselves in `seq` (oldest first).
struct ReduceState {
    std::array<double, 4> m{};
    std::int64_t count = 0;
    std::vector<double> seq;

    friend bool operator==(const ReduceState&, const ReduceState&) = default;
};

/// Init/Acc/Result template with an optional inverse of Acc.
struct ReductionSpec {
    using AccFn = std::function<void(ReduceState&, const Value&)>;
    using ResultFn = std::function<Value(const ReduceState&)>;

    std::string name;
    ReduceState init;
    AccFn acc;
    ResultFn result;
    /// When present, deacc(acc(s, v), v) == s.
    AccFn deacc;
    /// acc is insensitive to the order of values.
    bool commutative = true;
    /// Accepts any payload kind.
    bool any_kind = false;

    [[nodiscard]] bool invertible() const { return static_cast<bool>(deacc); }
};

/// Folds one value; phi is skipped.
inline void accumulate(const ReductionSpec& spec, ReduceState& st, const Value& v) {
    if (v.is_phi()) return;
    spec.acc(st, v);
    ++st.count;
}

inline void accumulate(const ReductionSpec& spec, ReduceState& st, const ValueSet& vs) {
    if (vs.is_phi()) return;
    for (const Value& v : vs.values()) accumulate(spec, st, v);
}

/// Removes a previously folded value; requires spec.invertible().
inline void deaccumulate(const ReductionSpec& spec, ReduceState& st, const Value& v) {
    if (v.is_phi()) return;
    spec.deacc(st, v);
    --st.count;
}

inline void deaccumulate(const ReductionSpec& spec, ReduceState& st, const ValueSet& vs) {
    if (vs.is_phi()) return;
    for (const Value& v : vs.values()) deaccumulate(spec, st, v);
}

/// Result of the fold; phi when no value is folded in.
inline Value finish(const ReductionSpec& spec, const ReduceState& st) {
    if (st.count == 0) return {};
    return spec.result(st);
}

/// Applies deacc per evicted value, then acc per admitted value.
inline ReduceState slide_state(const ReductionSpec& spec, ReduceState state, std::span<const Value> evicted,
                               std::span<const Value> admitted) {
    if (!spec.invertible()) {
        throw std::logic_error("reduction '" + spec.name + "' has no deacc; recompute instead");
    }
    for (const Value& v : evicted) deaccumulate(spec, state, v);
    for (const Value& v : admitted) accumulate(spec, state, v);
    return state;
}

/// Folds the runs of `buf` that meet (from, to], in buffer order. Each run's multiset
/// passes through `map` first; a run whose mapped multiset equals its predecessor's is the
/// continuation of one run and is folded once. phi values are skipped.
template <class Map>
Value reduce_runs(const ReductionSpec& spec, const SnapshotView& buf, Time from, Time to, Map&& map) {
    if (from < buf.base()) {
        throw CoverageError("window start " + to_string(from) + " precedes buffer base " + to_string(buf.base()));
    }
    ReduceState st = spec.init;
    SnapshotView w = buf.slice(from, to);
    ValueSet last;
    bool first = true;
    for (const Snapshot& s : w.snapshots()) {
        ValueSet v = map(s.val);
        if (!first && v == last) continue;
        accumulate(spec, st, v);
        last = std::move(v);
        first = false;
    }
    // A window reaching past the last snapshot also meets the trailing phi region, which
    // folds nothing.
    return finish(spec, st);
}

/// Folds every non-phi value of the maximal constant runs that meet (from, to], in buffer
/// order.
inline Value reduce_window(const ReductionSpec& spec, const SnapshotView& buf, Time from, Time to) {
    return reduce_runs(spec, buf, from, to, [](const ValueSet& v) -> const ValueSet& { return v; });
}

namespace reductions {

inline double num(const Value& v) { return v.as_number(); }

inline ReductionSpec sum() {
    return {"sum", {}, [](ReduceState& s, const Value& v) { s.m[0] += num(v); },
            [](const ReduceState& s) { return Value::real(s.m[0]); },
            [](ReduceState& s, const Value& v) { s.m[0] -= num(v); }};
}

inline ReductionSpec product() {
    ReduceState init;
    init.m[0] = 1.0;
    return {"product", init, [](ReduceState& s, const Value& v) { s.m[0] *= num(v); },
            [](const ReduceState& s) { return Value::real(s.m[0]); }, nullptr};
}

inline ReductionSpec min() {
    return {"min", {},
            [](ReduceState& s, const Value& v) { s.m[0] = s.count == 0 ? num(v) : std::min(s.m[0], num(v)); },
            [](const ReduceState& s) { return Value::real(s.m[0]); }, nullptr};
}

inline ReductionSpec max() {
    return {"max", {},
            [](ReduceState& s, const Value& v) { s.m[0] = s.count == 0 ? num(v) : std::max(s.m[0], num(v)); },
            [](const ReduceState& s) { return Value::real(s.m[0]); }, nullptr};
}

inline ReductionSpec count() {
    ReductionSpec spec{"count", {}, [](ReduceState&, const Value&) {},
                       [](const ReduceState& s) { return Value::integer(s.count); },
                       [](ReduceState&, const Value&) {}};
    spec.any_kind = true;
    return spec;
}

inline ReductionSpec avg() {
    return {"avg", {}, [](ReduceState& s, const Value& v) { s.m[0] += num(v); },
            [](const ReduceState& s) { return Value::real(s.m[0] / static_cast<double>(s.count)); },
            [](ReduceState& s, const Value& v) { s.m[0] -= num(v); }};
}

/// Population standard deviation from count, sum and sum of squares.
inline ReductionSpec stddev() {
    return {"stddev", {},
            [](ReduceState& s, const Value& v) {
                double x = num(v);
                s.m[0] += x;
                s.m[1] += x * x;
            },
            [](const ReduceState& s) {
                double n = static_cast<double>(s.count);
                double mean = s.m[0] / n;
                double var = s.m[1] / n - mean * mean;
                return Value::real(std::sqrt(std::max(0.0, var)));
            },
            [](ReduceState& s, const Value& v) {
                double x = num(v);
                s.m[0] -= x;
                s.m[1] -= x * x;
            }};
}

/// Root of the mean of squares.
inline ReductionSpec rms() {
    return {"rms", {}, [](ReduceState& s, const Value& v) { s.m[0] += num(v) * num(v); },
            [](const ReduceState& s) { return Value::real(std::sqrt(s.m[0] / static_cast<double>(s.count))); },
            [](ReduceState& s, const Value& v) { s.m[0] -= num(v) * num(v); }};
}

/// Largest magnitude; the numerator of the crest factor.
inline ReductionSpec peak_abs() {
    return {"peak_abs", {},
            [](ReduceState& s, const Value& v) {
                double x = std::fabs(num(v));
                s.m[0] = s.count == 0 ? x : std::max(s.m[0], x);
            },
            [](const ReduceState& s) { return Value::real(s.m[0]); }, nullptr};
}

inline void push_seq(ReduceState& s, const Value& v) { s.seq.push_back(num(v)); }

/// Fourth standardized central moment; phi for a constant window. Moments are summed in
/// sorted order so the result does not depend on fold order.
inline ReductionSpec kurtosis() {
    return {"kurtosis", {}, push_seq,
            [](const ReduceState& st) {
                ReduceState s;
                s.seq = st.seq;
                std::sort(s.seq.begin(), s.seq.end());
                double n = static_cast<double>(s.seq.size());
                double mean = 0;
                for (double x : s.seq) mean += x;
                mean /= n;
                double m2 = 0, m4 = 0;
                for (double x : s.seq) {
                    double d = (x - mean) * (x - mean);
                    m2 += d;
                    m4 += d * d;
                }
                m2 /= n;
                m4 /= n;
                return m2 == 0 ? Value::phi() : Value::real(m4 / (m2 * m2));
            },
            nullptr, true};
}

/// x(n-k) over the folded sequence, zero before its start.
inline double lag(const ReduceState& s, std::size_t k) {
    return k < s.seq.size() ? s.seq[s.seq.size() - 1 - k] : 0.0;
}

/// Triangular 11-tap low-pass with integer taps 1..6..1 (gain 36).
inline ReductionSpec pt_lowpass() {
    return {"pt_lowpass", {}, push_seq,
            [](const ReduceState& s) {
                double y = 0;
                for (std::size_t k = 0; k <= 10; ++k) y += static_cast<double>(6 - std::abs(static_cast<int>(k) - 5)) * lag(s, k);
                return Value::real(y);
            },
            nullptr, false};
}

/// All-pass at lag 16 minus a 32-tap moving sum, scaled by 32 to keep integer taps.
inline ReductionSpec pt_highpass() {
    return {"pt_highpass", {}, push_seq,
            [](const ReduceState& s) {
                double acc = 0;
                for (std::size_t k = 0; k < 32; ++k) acc += lag(s, k);
                return Value::real(32.0 * lag(s, 16) - acc);
            },
            nullptr, false};
}

/// Five-point derivative 2x(n) + x(n-1) - x(n-3) - 2x(n-4) (gain 8).
inline ReductionSpec pt_derivative() {
    return {"pt_derivative", {}, push_seq,
            [](const ReduceState& s) {
                return Value::real(2.0 * lag(s, 0) + lag(s, 1) - lag(s, 3) - 2.0 * lag(s, 4));
            },
            nullptr, false};
}

} // namespace reductions

/// Name -> spec. Built-ins are present on first use; custom specs may be added at startup.
class ReductionRegistry {
  public:
    static ReductionRegistry& global() {
        static ReductionRegistry reg;
        return reg;
    }

    void add(ReductionSpec spec) {
        std::lock_guard lock(mu_);
        auto name = spec.name;
        specs_[name] = std::make_shared<const ReductionSpec>(std::move(spec));
    }

    [[nodiscard]] std::shared_ptr<const ReductionSpec> find(const std::string& name) const {
        std::lock_guard lock(mu_);
        auto it = specs_.find(name);
        return it == specs_.end() ? nullptr : it->second;
    }

    [[nodiscard]] const ReductionSpec& at(const std::string& name) const {
        auto p = find(name);
        if (!p) throw std::out_of_range("unknown reduction '" + name + "'");
        return *p;
    }

    [[nodiscard]] std::vector<std::string> names() const {
        std::lock_guard lock(mu_);
        std::vector<std::string> out;
        for (const auto& [k, v] : specs_) out.push_back(k);
        return out;
    }

  private:
    ReductionRegistry() {
        for (auto spec : {reductions::sum(), reductions::product(), reductions::min(), reductions::max(),
                          reductions::count(), reductions::avg(), reductions::stddev(), reductions::rms(),
                          reductions::peak_abs(), reductions::kurtosis(), reductions::pt_lowpass(),
                          reductions::pt_highpass(), reductions::pt_derivative()}) {
            specs_[spec.name] = std::make_shared<const ReductionSpec>(spec);
        }
    }

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const ReductionSpec>> specs_;
};

} // namespace tilt
