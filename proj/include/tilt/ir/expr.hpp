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
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tilt/core/time.hpp"
#include "tilt/core/value.hpp"

namespace tilt::ir {

struct Node;
/// Immutable, shareable expression tree.
using Expr = std::shared_ptr<const Node>;

struct ConstNode {
    Value value;
};
/// The domain variable t.
struct TimeVarNode {};
/// The current element inside a Reduce map.
struct ElemNode {};
struct BinaryNode {
    BinaryOp op;
    Expr lhs, rhs;
};
struct UnaryNode {
    UnaryOp op;
    Expr arg;
    std::string field; // UnaryOp::Field only
};
struct IfNode {
    Expr cond, then_branch, else_branch;
};
/// Value of a temporal object at an affine time t + c.
struct IndexNode {
    std::string source;
    Expr time;
};
/// The window (t + lo, t + hi] of a temporal object; only valid as a Reduce operand.
struct SliceNode {
    std::string source;
    Ticks lo = 0, hi = 0;
};
/// Folds the window's values, optionally transformed element-wise by `map` (an expression
/// over ElemNode).
struct ReduceNode {
    std::string reduction;
    Expr window;
    Expr map;
};
/// Pure scalar function registered by name.
struct CallNode {
    std::string fn;
    std::vector<Expr> args;
};

struct Node {
    std::variant<ConstNode, TimeVarNode, ElemNode, BinaryNode, UnaryNode, IfNode, IndexNode, SliceNode, ReduceNode,
                 CallNode>
        v;

    template <class T>
    [[nodiscard]] const T* as() const {
        return std::get_if<T>(&v);
    }
    template <class T>
    [[nodiscard]] bool is() const {
        return std::holds_alternative<T>(v);
    }
};

template <class T>
Expr make(T node) {
    return std::make_shared<const Node>(Node{std::move(node)});
}

// ---------------------------------------------------------------------------
// Builders.

inline Expr constant(Value v) { return make(ConstNode{std::move(v)}); }
inline Expr lit(double d) { return constant(Value::real(d)); }
inline Expr lit_int(std::int64_t i) { return constant(Value::integer(i)); }
inline Expr lit_bool(bool b) { return constant(Value::boolean(b)); }
inline Expr phi() { return constant(Value::phi()); }
inline Expr t() { return make(TimeVarNode{}); }
inline Expr elem() { return make(ElemNode{}); }
inline Expr binary(BinaryOp op, Expr l, Expr r) { return make(BinaryNode{op, std::move(l), std::move(r)}); }
inline Expr unary(UnaryOp op, Expr e) { return make(UnaryNode{op, std::move(e), {}}); }
inline Expr field(Expr e, std::string name) { return make(UnaryNode{UnaryOp::Field, std::move(e), std::move(name)}); }
inline Expr if_(Expr c, Expr a, Expr b) { return make(IfNode{std::move(c), std::move(a), std::move(b)}); }
inline Expr index(std::string src, Expr time) { return make(IndexNode{std::move(src), std::move(time)}); }
inline Expr slice(std::string src, Ticks lo, Ticks hi) { return make(SliceNode{std::move(src), lo, hi}); }
inline Expr reduce(std::string red, Expr window, Expr map = nullptr) {
    return make(ReduceNode{std::move(red), std::move(window), std::move(map)});
}
inline Expr call(std::string fn, std::vector<Expr> args) { return make(CallNode{std::move(fn), std::move(args)}); }

/// t + offset as a time expression: `t` for zero, otherwise (+ t offset).
inline Expr time_at(Ticks offset) { return offset == 0 ? t() : binary(BinaryOp::Add, t(), lit_int(offset)); }
/// Index(src, t + offset).
inline Expr at(std::string src, Ticks offset = 0) { return index(std::move(src), time_at(offset)); }

inline Expr operator+(Expr a, Expr b) { return binary(BinaryOp::Add, std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return binary(BinaryOp::Sub, std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return binary(BinaryOp::Mul, std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return binary(BinaryOp::Div, std::move(a), std::move(b)); }
inline Expr operator<(Expr a, Expr b) { return binary(BinaryOp::Lt, std::move(a), std::move(b)); }
inline Expr operator>(Expr a, Expr b) { return binary(BinaryOp::Gt, std::move(a), std::move(b)); }
inline Expr operator<=(Expr a, Expr b) { return binary(BinaryOp::Le, std::move(a), std::move(b)); }
inline Expr operator>=(Expr a, Expr b) { return binary(BinaryOp::Ge, std::move(a), std::move(b)); }
// Logical operators are named functions: overloading !, && and || on shared_ptr would
// hijack null checks.
inline Expr and_(Expr a, Expr b) { return binary(BinaryOp::And, std::move(a), std::move(b)); }
inline Expr or_(Expr a, Expr b) { return binary(BinaryOp::Or, std::move(a), std::move(b)); }
inline Expr not_(Expr a) { return unary(UnaryOp::Not, std::move(a)); }
inline Expr eq(Expr a, Expr b) { return binary(BinaryOp::Eq, std::move(a), std::move(b)); }
inline Expr is_phi(Expr a) { return unary(UnaryOp::IsPhi, std::move(a)); }
inline Expr not_phi(Expr a) { return not_(is_phi(std::move(a))); }

// ---------------------------------------------------------------------------
// Inspection.

/// c when `time` is t, t + c, t - c or c + t with constant integer c.
inline std::optional<Ticks> affine_offset(const Expr& time) {
    if (time->is<TimeVarNode>()) return 0;
    const auto* b = time->as<BinaryNode>();
    if (!b) return std::nullopt;
    auto int_const = [](const Expr& e) -> std::optional<Ticks> {
        const auto* c = e->as<ConstNode>();
        if (c && c->value.kind() == ValueKind::Int) return c->value.as_int();
        return std::nullopt;
    };
    if (b->op == BinaryOp::Add) {
        if (b->lhs->is<TimeVarNode>()) return int_const(b->rhs);
        if (b->rhs->is<TimeVarNode>()) return int_const(b->lhs);
    }
    if (b->op == BinaryOp::Sub && b->lhs->is<TimeVarNode>()) {
        auto c = int_const(b->rhs);
        if (c) return -*c;
    }
    return std::nullopt;
}

/// Children in evaluation order.
inline std::vector<Expr> children(const Expr& e) {
    return std::visit(
        [](const auto& n) -> std::vector<Expr> {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, BinaryNode>) {
                return {n.lhs, n.rhs};
            } else if constexpr (std::is_same_v<T, UnaryNode>) {
                return {n.arg};
            } else if constexpr (std::is_same_v<T, IfNode>) {
                return {n.cond, n.then_branch, n.else_branch};
            } else if constexpr (std::is_same_v<T, IndexNode>) {
                return {n.time};
            } else if constexpr (std::is_same_v<T, ReduceNode>) {
                if (n.map) return {n.window, n.map};
                return {n.window};
            } else if constexpr (std::is_same_v<T, CallNode>) {
                return n.args;
            } else {
                return {};
            }
        },
        e->v);
}

/// Pre-order visit of every node.
inline void visit(const Expr& e, const std::function<void(const Expr&)>& f) {
    f(e);
    for (const Expr& c : children(e)) visit(c, f);
}

inline std::size_t node_count(const Expr& e) {
    std::size_t n = 0;
    visit(e, [&](const Expr&) { ++n; });
    return n;
}

/// Structural equality.
inline bool equal(const Expr& a, const Expr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->v.index() != b->v.index()) return false;
    bool same = std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const T& y = std::get<T>(b->v);
            if constexpr (std::is_same_v<T, ConstNode>) {
                return x.value == y.value;
            } else if constexpr (std::is_same_v<T, BinaryNode>) {
                return x.op == y.op;
            } else if constexpr (std::is_same_v<T, UnaryNode>) {
                return x.op == y.op && x.field == y.field;
            } else if constexpr (std::is_same_v<T, IndexNode>) {
                return x.source == y.source;
            } else if constexpr (std::is_same_v<T, SliceNode>) {
                return x.source == y.source && x.lo == y.lo && x.hi == y.hi;
            } else if constexpr (std::is_same_v<T, ReduceNode>) {
                return x.reduction == y.reduction && static_cast<bool>(x.map) == static_cast<bool>(y.map);
            } else if constexpr (std::is_same_v<T, CallNode>) {
                return x.fn == y.fn && x.args.size() == y.args.size();
            } else {
                return true;
            }
        },
        a->v);
    if (!same) return false;
    auto ca = children(a), cb = children(b);
    if (ca.size() != cb.size()) return false;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        if (!equal(ca[i], cb[i])) return false;
    }
    return true;
}

/// Rebuilds `e` bottom-up; `f` sees each node after its children were rewritten and may
/// return a replacement or nullptr to keep the rebuilt node.
inline Expr rewrite(const Expr& e, const std::function<Expr(const Expr&)>& f) {
    auto kids = children(e);
    bool changed = false;
    std::vector<Expr> out;
    out.reserve(kids.size());
    for (const Expr& k : kids) {
        out.push_back(rewrite(k, f));
        changed = changed || out.back() != k;
    }
    Expr rebuilt = e;
    if (changed) {
        rebuilt = std::visit(
            [&](const auto& n) -> Expr {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, BinaryNode>) {
                    return make(BinaryNode{n.op, out[0], out[1]});
                } else if constexpr (std::is_same_v<T, UnaryNode>) {
                    return make(UnaryNode{n.op, out[0], n.field});
                } else if constexpr (std::is_same_v<T, IfNode>) {
                    return make(IfNode{out[0], out[1], out[2]});
                } else if constexpr (std::is_same_v<T, IndexNode>) {
                    return make(IndexNode{n.source, out[0]});
                } else if constexpr (std::is_same_v<T, ReduceNode>) {
                    return make(ReduceNode{n.reduction, out[0], n.map ? out[1] : nullptr});
                } else if constexpr (std::is_same_v<T, CallNode>) {
                    return make(CallNode{n.fn, out});
                } else {
                    return make(n);
                }
            },
            e->v);
    }
    Expr r = f(rebuilt);
    return r ? r : rebuilt;
}

/// Names of temporal objects referenced by Index or Slice, in first-seen order.
inline std::vector<std::string> references(const Expr& e) {
    std::vector<std::string> out;
    visit(e, [&](const Expr& n) {
        const std::string* s = nullptr;
        if (const auto* i = n->as<IndexNode>()) s = &i->source;
        if (const auto* sl = n->as<SliceNode>()) s = &sl->source;
        if (s && std::find(out.begin(), out.end(), *s) == out.end()) out.push_back(*s);
    });
    return out;
}

/// Number of Index or Slice nodes reading `name`.
inline std::size_t reference_count(const Expr& e, const std::string& name) {
    std::size_t n = 0;
    visit(e, [&](const Expr& x) {
        if (const auto* i = x->as<IndexNode>(); i && i->source == name) ++n;
        if (const auto* s = x->as<SliceNode>(); s && s->source == name) ++n;
    });
    return n;
}

inline std::size_t reduce_count(const Expr& e) {
    std::size_t n = 0;
    visit(e, [&](const Expr& x) { n += x->is<ReduceNode>() ? 1 : 0; });
    return n;
}

/// True when some node satisfies `pred`.
inline bool any_node(const Expr& e, const std::function<bool(const Expr&)>& pred) {
    bool found = false;
    visit(e, [&](const Expr& x) { found = found || pred(x); });
    return found;
}

} // namespace tilt::ir
