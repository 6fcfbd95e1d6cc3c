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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilt/core/event.hpp"
#include "tilt/core/time.hpp"
#include "tilt/core/value.hpp"

namespace tilt {

class CoverageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Closes the region (previous ts, ts] with value multiset `val`.
struct Snapshot {
    Time ts;
    ValueSet val;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

/// Read-only window onto a run of snapshots. Snapshot 0 covers (base, snaps[0].ts];
/// everything after the last snapshot is phi.
class SnapshotView {
  public:
    SnapshotView() = default;
    SnapshotView(Time base, std::span<const Snapshot> snaps) : base_(base), snaps_(snaps) {}

    [[nodiscard]] Time base() const { return base_; }
    [[nodiscard]] std::span<const Snapshot> snapshots() const { return snaps_; }
    [[nodiscard]] std::size_t size() const { return snaps_.size(); }
    [[nodiscard]] bool empty() const { return snaps_.empty(); }
    [[nodiscard]] const Snapshot& operator[](std::size_t i) const { return snaps_[i]; }

    /// Index of the snapshot whose region contains t, or size() when t is past the end.
    [[nodiscard]] std::size_t locate(Ticks t) const {
        auto it = std::lower_bound(snaps_.begin(), snaps_.end(), t,
                                   [](const Snapshot& s, Ticks x) { return s.ts.ticks() < x; });
        return static_cast<std::size_t>(it - snaps_.begin());
    }

    /// The multiset active at t. Throws CoverageError for t <= base.
    [[nodiscard]] const ValueSet& value_at(Time t) const {
        if (t <= base_) {
            throw CoverageError("time " + to_string(t) + " is not after buffer base " + to_string(base_));
        }
        std::size_t i = locate(t.ticks());
        return i < snaps_.size() ? snaps_[i].val : phi_set();
    }

    /// Sub-view covering (from, to]: its base is `from` and it keeps every snapshot whose
    /// region meets (from, to]. Snapshot timestamps are not clipped.
    [[nodiscard]] SnapshotView slice(Time from, Time to) const {
        if (from < base_) {
            throw CoverageError("slice start " + to_string(from) + " precedes buffer base " + to_string(base_));
        }
        std::size_t lo = locate(from.ticks() == Time::max().ticks() ? from.ticks() : from.ticks() + 1);
        std::size_t hi = to <= from ? lo : std::min(snaps_.size(), locate(to.ticks()) + 1);
        return {from, snaps_.subspan(lo, hi - lo)};
    }

    static const ValueSet& phi_set() {
        static const ValueSet phi;
        return phi;
    }

  private:
    Time base_ = Time::min();
    std::span<const Snapshot> snaps_;
};

/// Change-point encoding of a temporal object.
class SnapshotBuffer {
  public:
    explicit SnapshotBuffer(Time base = Time::min()) : base_(base) {}
    SnapshotBuffer(Time base, std::vector<Snapshot> snaps) : base_(base), snaps_(std::move(snaps)) { check_order(); }

    [[nodiscard]] Time base() const { return base_; }
    [[nodiscard]] const std::vector<Snapshot>& snapshots() const { return snaps_; }
    [[nodiscard]] std::size_t size() const { return snaps_.size(); }
    [[nodiscard]] bool empty() const { return snaps_.empty(); }
    [[nodiscard]] const Snapshot& operator[](std::size_t i) const { return snaps_[i]; }
    [[nodiscard]] SnapshotView view() const { return {base_, snaps_}; }
    operator SnapshotView() const { return view(); } // NOLINT(google-explicit-constructor)

    [[nodiscard]] const ValueSet& value_at(Time t) const { return view().value_at(t); }

    void reserve(std::size_t n) { snaps_.reserve(n); }

    /// Appends a region ending at ts. Requires ts past the current end.
    void append(Time ts, ValueSet val) {
        if (ts <= end()) {
            throw MalformedStream("snapshot " + to_string(ts) + " does not advance past " + to_string(end()));
        }
        snaps_.push_back({ts, std::move(val)});
    }

    /// Appends, extending the last snapshot instead when its value is equal.
    void append_merged(Time ts, ValueSet val) {
        if (!snaps_.empty() && snaps_.back().val == val) {
            if (ts <= snaps_.back().ts) {
                throw MalformedStream("snapshot " + to_string(ts) + " does not advance");
            }
            snaps_.back().ts = ts;
            return;
        }
        append(ts, std::move(val));
    }

    /// Coverage end: the last snapshot timestamp, or base when empty.
    [[nodiscard]] Time end() const { return snaps_.empty() ? base_ : snaps_.back().ts; }

    /// No two consecutive snapshots carry equal multisets.
    [[nodiscard]] bool is_normal() const {
        for (std::size_t i = 1; i < snaps_.size(); ++i) {
            if (snaps_[i].val == snaps_[i - 1].val) return false;
        }
        return true;
    }

    void normalize() {
        if (snaps_.empty()) return;
        std::size_t w = 0;
        for (std::size_t r = 1; r < snaps_.size(); ++r) {
            if (snaps_[r].val == snaps_[w].val) {
                snaps_[w].ts = snaps_[r].ts;
            } else {
                snaps_[++w] = std::move(snaps_[r]);
            }
        }
        snaps_.resize(w + 1);
    }

    /// Drops trailing phi snapshots; they carry no information past the coverage rule.
    void strip_trailing_phi() {
        while (!snaps_.empty() && snaps_.back().val.is_phi()) snaps_.pop_back();
    }

    /// Owned copy of the content on (from, to] with the final snapshot clipped to `to`.
    [[nodiscard]] SnapshotBuffer clip(Time from, Time to) const {
        SnapshotView v = view().slice(from, to);
        SnapshotBuffer out(from);
        out.reserve(v.size());
        for (const Snapshot& s : v.snapshots()) out.snaps_.push_back({std::min(s.ts, to), s.val});
        return out;
    }

    friend bool operator==(const SnapshotBuffer&, const SnapshotBuffer&) = default;

  private:
    void check_order() const {
        Time prev = base_;
        for (const Snapshot& s : snaps_) {
            if (s.ts <= prev) throw MalformedStream("snapshot timestamps must strictly increase past base");
            prev = s.ts;
        }
    }

    Time base_;
    std::vector<Snapshot> snaps_;
};

inline std::string to_string(const SnapshotBuffer& b) {
    std::string s = "base=" + to_string(b.base()) + " [";
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) s += ", ";
        s += "(" + to_string(b[i].ts) + "," + to_string(b[i].val) + ")";
    }
    return s + "]";
}

/// Region sweep: a snapshot closes every region between consecutive event boundaries.
/// Regions without an active event hold {phi}. The result is in normal form and never ends
/// with a phi snapshot. Overlapping events give multisets ordered by (start, end, input
/// position).
inline SnapshotBuffer events_to_ssbuf(std::span<const Event> events, Time base = Time::min()) {
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (!(e.start < e.end)) {
            throw MalformedStream("event " + std::to_string(i) + " has start >= end: " + to_string(e));
        }
        if (e.start < base) {
            throw MalformedStream("event " + std::to_string(i) + " starts before buffer base " + to_string(base));
        }
        if (i > 0 && e.start < events[i - 1].start) {
            throw MalformedStream("events not sorted by start at index " + std::to_string(i));
        }
        if (e.payload.is_phi()) {
            throw MalformedStream("event " + std::to_string(i) + " has a phi payload");
        }
    }

    SnapshotBuffer out(base);
    out.reserve(events.size() + 1);
    std::vector<std::size_t> active;
    auto before = [&](std::size_t a, std::size_t b) {
        const Event& x = events[a];
        const Event& y = events[b];
        if (x.start != y.start) return x.start < y.start;
        if (x.end != y.end) return x.end < y.end;
        return a < b;
    };
    auto region_value = [&]() -> ValueSet {
        if (active.empty()) return {};
        if (active.size() == 1) return ValueSet(events[active.front()].payload);
        std::vector<Value> vals;
        vals.reserve(active.size());
        for (std::size_t k : active) vals.push_back(events[k].payload);
        return ValueSet::of(std::move(vals));
    };

    Time cur = base;
    std::size_t next = 0;
    while (next < events.size() || !active.empty()) {
        Time t = Time::max();
        if (next < events.size()) t = events[next].start;
        for (std::size_t k : active) t = std::min(t, events[k].end);
        if (t > cur) {
            out.append_merged(t, region_value());
        }
        std::erase_if(active, [&](std::size_t k) { return events[k].end == t; });
        while (next < events.size() && events[next].start == t) {
            auto pos = std::upper_bound(active.begin(), active.end(), next, before);
            active.insert(pos, next);
            ++next;
        }
        cur = t;
    }
    return out;
}

/// One event per non-phi value per maximal run, after per-value coalescing across
/// consecutive regions. Sorted by (start, end).
inline std::vector<Event> ssbuf_to_events(const SnapshotView& buf) {
    struct Open {
        Value value;
        Time start;
    };
    std::vector<Event> out;
    std::vector<Open> open;
    std::vector<Open> still;
    std::vector<bool> taken;
    Time prev = buf.base();
    for (const Snapshot& s : buf.snapshots()) {
        std::span<const Value> vals = s.val.is_phi() ? std::span<const Value>{} : s.val.values();
        taken.assign(vals.size(), false);
        still.clear();
        for (Open& o : open) {
            bool matched = false;
            for (std::size_t k = 0; k < vals.size(); ++k) {
                if (!taken[k] && vals[k] == o.value) {
                    taken[k] = true;
                    matched = true;
                    break;
                }
            }
            if (matched) {
                still.push_back(std::move(o));
            } else {
                out.push_back({o.start, prev, std::move(o.value)});
            }
        }
        for (std::size_t k = 0; k < vals.size(); ++k) {
            if (!taken[k]) still.push_back({vals[k], prev});
        }
        std::swap(open, still);
        prev = s.ts;
    }
    for (Open& o : open) out.push_back({o.start, prev, std::move(o.value)});
    std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.end < b.end;
    });
    return out;
}

inline std::vector<Event> ssbuf_to_events(const SnapshotBuffer& buf) { return ssbuf_to_events(buf.view()); }

/// Free-function form of SnapshotView::value_at.
inline const ValueSet& value_at(const SnapshotView& buf, Time t) { return buf.value_at(t); }

/// Concatenates buffers that tile consecutive ranges, merging equal values at seams.
inline SnapshotBuffer concat(std::span<const SnapshotBuffer> parts) {
    if (parts.empty()) return SnapshotBuffer();
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    SnapshotBuffer out(parts.front().base());
    out.reserve(total);
    for (const auto& p : parts) {
        for (const Snapshot& s : p.snapshots()) out.append_merged(s.ts, s.val);
    }
    return out;
}

} // namespace tilt
