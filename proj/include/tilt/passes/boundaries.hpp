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
#include <map>
#include <stdexcept>
#include <string>

#include "tilt/ir/query.hpp"

namespace tilt::passes {

class AnalysisError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Dependence of a value at t on the ticks (t + lo, t + hi] of one input. An Index read at
/// t + c contributes (c, c); a window (t + a, t + b] contributes (a, b); nesting adds.
struct Interval {
    Ticks lo = 0, hi = 0;

    [[nodiscard]] Interval shifted(Ticks a, Ticks b) const { return {lo + a, hi + b}; }
    [[nodiscard]] Interval hull(const Interval& o) const { return {std::min(lo, o.lo), std::max(hi, o.hi)}; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// def -> input -> dependence interval.
using Lineage = std::map<std::string, std::map<std::string, Interval>>;

namespace detail {

/// Calls f(source, a, b) for every temporal read in `e`.
template <class F>
void for_each_read(const ir::Expr& e, F&& f) {
    ir::visit(e, [&](const ir::Expr& n) {
        if (const auto* i = n->as<ir::IndexNode>()) {
            auto c = ir::affine_offset(i->time);
            if (!c) throw AnalysisError("non-constant offset in index of ~" + i->source);
            f(i->source, *c, *c, false);
        } else if (const auto* s = n->as<ir::SliceNode>()) {
            f(s->source, s->lo, s->hi, true);
        }
    });
}

inline void merge(std::map<std::string, Interval>& into, const std::string& k, Interval v) {
    auto [it, fresh] = into.emplace(k, v);
    if (!fresh) it->second = it->second.hull(v);
}

} // namespace detail

/// Transitive dependence of every def on every declared input.
inline Lineage temporal_lineage(const ir::Query& q) {
    Lineage lin;
    for (auto i : ir::topo_order(q)) {
        const auto& d = q.defs[i];
        auto& mine = lin[d.name];
        detail::for_each_read(d.body, [&](const std::string& src, Ticks a, Ticks b, bool) {
            if (q.is_input(src)) {
                detail::merge(mine, src, {a, b});
                return;
            }
            auto it = lin.find(src);
            if (it == lin.end()) throw AnalysisError("unbound temporal ~" + src);
            for (const auto& [in, iv] : it->second) detail::merge(mine, in, iv.shifted(a, b));
        });
    }
    return lin;
}

/// Rewrites every def's domain to (Ts + lo, Te + hi] so that the output is computable on
/// (Ts, Te] from inputs covering (Ts - lookback, Te + lookahead].
///
/// Regions propagate from the output (which gets (Ts, Te]) to producers: a read at t + c
/// from grid points in (S, E] needs ticks (S + c, E + c]; a window (t + a, t + b] needs
/// (S + a, E + b]. A producer with precision p > 1 evaluated at tick x reports its value at
/// the grid point ceil(x), so unless every read tick is on its grid the region's end is
/// widened by p - 1. Defs the output does not read get (Ts, Te] as if they were outputs.
inline ir::Query resolve_boundaries(ir::Query q) {
    auto order = ir::topo_order(q);
    std::map<std::string, Interval> region;
    region[q.output] = {0, 0};
    std::map<std::string, Interval> in_region;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto& d = q.defs[*it];
        // Defs the output does not read are still evaluated, over (Ts, Te].
        const Interval mine = region.emplace(d.name, Interval{}).first->second;
        const Ticks p = d.domain.precision;
        detail::for_each_read(d.body, [&](const std::string& src, Ticks a, Ticks b, bool) {
            Interval need = mine.shifted(a, b);
            if (q.is_input(src)) {
                detail::merge(in_region, src, need);
                return;
            }
            const auto* producer = q.find_def(src);
            if (!producer) throw AnalysisError("unbound temporal ~" + src);
            const Ticks ps = producer->domain.precision;
            const bool aligned = ps == 1 || (p % ps == 0 && b % ps == 0);
            if (!aligned) need.hi += ps - 1;
            detail::merge(region, src, need);
        });
    }
    for (auto& d : q.defs) {
        const Interval r = region.at(d.name);
        d.domain = ir::TimeDomain::symbolic(r.lo, r.hi, d.domain.precision);
    }
    q.lookback.clear();
    q.lookahead.clear();
    for (const auto& in : q.inputs) {
        auto it = in_region.find(in.name);
        Interval r = it == in_region.end() ? Interval{} : it->second;
        q.lookback[in.name] = std::max<Ticks>(0, -r.lo);
        q.lookahead[in.name] = std::max<Ticks>(0, r.hi);
    }
    return q;
}

} // namespace tilt::passes
