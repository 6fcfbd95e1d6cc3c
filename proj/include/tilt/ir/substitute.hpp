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

#include <stdexcept>
#include <string>

#include "tilt/ir/expr.hpp"

namespace tilt::ir {

/// The producer is read through a window, so it cannot be inlined pointwise.
class NotFusible : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Re-binds the domain variable: the result evaluated at t equals `e` evaluated at t + delta.
inline Expr shift_time(const Expr& e, Ticks delta) {
    if (delta == 0) return e;
    if (e->is<TimeVarNode>()) return time_at(delta);
    if (const auto* i = e->as<IndexNode>()) {
        if (auto c = affine_offset(i->time)) return at(i->source, *c + delta);
        return index(i->source, shift_time(i->time, delta));
    }
    if (const auto* s = e->as<SliceNode>()) return slice(s->source, s->lo + delta, s->hi + delta);
    if (const auto* r = e->as<ReduceNode>()) {
        // The map ranges over window elements and has no domain variable of its own.
        return reduce(r->reduction, shift_time(r->window, delta), r->map);
    }
    auto kids = children(e);
    if (kids.empty()) return e;
    std::vector<Expr> shifted;
    shifted.reserve(kids.size());
    for (const auto& k : kids) shifted.push_back(shift_time(k, delta));
    return std::visit(
        [&](const auto& n) -> Expr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, BinaryNode>) {
                return binary(n.op, shifted[0], shifted[1]);
            } else if constexpr (std::is_same_v<T, UnaryNode>) {
                return make(UnaryNode{n.op, shifted[0], n.field});
            } else if constexpr (std::is_same_v<T, IfNode>) {
                return if_(shifted[0], shifted[1], shifted[2]);
            } else if constexpr (std::is_same_v<T, CallNode>) {
                return call(n.fn, shifted);
            } else {
                return e;
            }
        },
        e->v);
}

/// Replaces every Index(name, t + c) in `host` by `replacement` evaluated at t + c.
/// Throws NotFusible when `host` reads `name` through a Slice.
inline Expr substitute(const Expr& host, const std::string& name, const Expr& replacement) {
    return rewrite(host, [&](const Expr& n) -> Expr {
        if (const auto* s = n->as<SliceNode>(); s && s->source == name) {
            throw NotFusible("~" + name + " is read through a window");
        }
        if (const auto* i = n->as<IndexNode>(); i && i->source == name) {
            auto c = affine_offset(i->time);
            if (!c) throw NotFusible("~" + name + " is read at a non-affine time");
            return shift_time(replacement, *c);
        }
        return nullptr;
    });
}

} // namespace tilt::ir
