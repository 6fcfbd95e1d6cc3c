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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tilt/ir/query.hpp"
#include "tilt/ir/substitute.hpp"
#include "tilt/passes/boundaries.hpp"

namespace tilt::passes {

namespace detail {

/// phi whenever the Index(source, t) reads inside `e` are phi.
inline bool phi_strict(const ir::Expr& e) {
    using namespace ir;
    if (e->is<IndexNode>()) return true;
    if (const auto* b = e->as<BinaryNode>()) return phi_strict(b->lhs) || phi_strict(b->rhs);
    if (const auto* u = e->as<UnaryNode>()) return u->op != UnaryOp::IsPhi && phi_strict(u->arg);
    if (const auto* i = e->as<IfNode>()) {
        return phi_strict(i->cond) || (phi_strict(i->then_branch) && phi_strict(i->else_branch));
    }
    if (const auto* c = e->as<CallNode>()) {
        for (const auto& a : c->args) {
            if (phi_strict(a)) return true;
        }
    }
    return false;
}

/// When `body` is a phi-strict function of Index(src, t) alone, returns that function with
/// the reads replaced by the reduce element.
inline std::optional<ir::Expr> as_element_map(const ir::Expr& body, std::string& src) {
    using namespace ir;
    auto refs = references(body);
    if (refs.size() != 1) return std::nullopt;
    // Every leaf is a constant or a read at exactly t; index time expressions are not
    // leaves of the value.
    auto pointwise = [](auto& self, const Expr& n) -> bool {
        if (const auto* i = n->as<IndexNode>()) return affine_offset(i->time) == Ticks{0};
        if (n->is<TimeVarNode>() || n->is<ReduceNode>() || n->is<SliceNode>() || n->is<ElemNode>()) return false;
        for (const auto& c : children(n)) {
            if (!self(self, c)) return false;
        }
        return true;
    };
    if (!pointwise(pointwise, body) || !phi_strict(body)) return std::nullopt;
    src = refs.front();
    return substitute(body, src, elem());
}

/// `inner` applied first, then `outer` (an expression over the element) when present.
inline ir::Expr compose_maps(const ir::Expr& inner, const ir::Expr& outer) {
    if (!outer) return inner;
    return ir::rewrite(outer, [&](const ir::Expr& n) -> ir::Expr { return n->is<ir::ElemNode>() ? inner : nullptr; });
}

/// Inlines `producer` into `host` evaluated at precision `host_precision`, or nullopt when
/// some read of the producer cannot be inlined.
inline std::optional<ir::Expr> inline_into(const ir::Expr& host, Ticks host_precision, const ir::TemporalDef& producer) {
    using namespace ir;
    const Ticks pp = producer.domain.precision;
    // Window reads first: they need the producer to be an element-wise map of one source.
    std::string src;
    std::optional<Expr> elem_map;
    bool ok = true;
    visit(host, [&](const Expr& n) {
        if (const auto* i = n->as<IndexNode>(); i && i->source == producer.name) {
            auto c = affine_offset(i->time);
            if (!c || !(pp == 1 || (host_precision % pp == 0 && *c % pp == 0))) ok = false;
        }
        if (const auto* r = n->as<ReduceNode>()) {
            const auto* s = r->window->as<SliceNode>();
            if (s && s->source == producer.name) {
                if (!elem_map) elem_map = pp == 1 ? as_element_map(producer.body, src) : std::nullopt;
                if (!elem_map) ok = false;
            }
        }
    });
    if (!ok) return std::nullopt;
    Expr out = host;
    if (elem_map) {
        out = rewrite(out, [&](const Expr& n) -> Expr {
            const auto* r = n->as<ReduceNode>();
            if (!r) return nullptr;
            const auto* s = r->window->as<SliceNode>();
            if (!s || s->source != producer.name) return nullptr;
            return reduce(r->reduction, slice(src, s->lo, s->hi), compose_maps(*elem_map, r->map));
        });
    }
    return substitute(out, producer.name, producer.body);
}

} // namespace detail

/// Removes defs the output does not read, directly or transitively.
inline ir::Query eliminate_dead_defs(ir::Query q) {
    std::set<std::string> live{q.output};
    auto order = ir::topo_order(q);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto& d = q.defs[*it];
        if (!live.count(d.name)) continue;
        for (const auto& r : ir::references(d.body)) live.insert(r);
    }
    std::erase_if(q.defs, [&](const ir::TemporalDef& d) { return !live.count(d.name); });
    return q;
}

/// Folds operators whose operands are all constants. Folding that would raise an
/// evaluation error is left for run time.
inline ir::Expr fold_constants(const ir::Expr& e) {
    using namespace ir;
    return rewrite(e, [](const Expr& n) -> Expr {
        auto value_of = [](const Expr& x) -> const Value* {
            const auto* c = x->as<ConstNode>();
            return c ? &c->value : nullptr;
        };
        try {
            if (const auto* b = n->as<BinaryNode>()) {
                const Value *l = value_of(b->lhs), *r = value_of(b->rhs);
                if (l && r) return constant(apply(b->op, *l, *r));
            } else if (const auto* u = n->as<UnaryNode>()) {
                if (const Value* a = value_of(u->arg)) return constant(apply(u->op, *a, u->field));
            } else if (const auto* i = n->as<IfNode>()) {
                if (const Value* c = value_of(i->cond)) {
                    if (c->is_phi()) return phi();
                    if (c->kind() == ValueKind::Bool) return c->as_bool() ? i->then_branch : i->else_branch;
                }
            }
        } catch (const EvalError&) {
        }
        return nullptr;
    });
}

namespace detail {

/// `e` is phi whenever `x` is phi.
inline bool strict_in(const ir::Expr& e, const ir::Expr& x) {
    using namespace ir;
    if (equal(e, x)) return true;
    if (const auto* b = e->as<BinaryNode>()) return strict_in(b->lhs, x) || strict_in(b->rhs, x);
    if (const auto* u = e->as<UnaryNode>()) return u->op != UnaryOp::IsPhi && strict_in(u->arg, x);
    if (const auto* i = e->as<IfNode>()) {
        return strict_in(i->cond, x) || (strict_in(i->then_branch, x) && strict_in(i->else_branch, x));
    }
    if (const auto* c = e->as<CallNode>()) {
        return std::any_of(c->args.begin(), c->args.end(), [&](const Expr& a) { return strict_in(a, x); });
    }
    return false;
}

/// Collects X from a conjunction of not(is-phi(X)) terms; false if `c` has another shape.
inline bool phi_guards(const ir::Expr& c, std::vector<ir::Expr>& out) {
    using namespace ir;
    if (const auto* b = c->as<BinaryNode>(); b && b->op == BinaryOp::And) {
        return phi_guards(b->lhs, out) && phi_guards(b->rhs, out);
    }
    const auto* n = c->as<UnaryNode>();
    if (!n || n->op != UnaryOp::Not) return false;
    const auto* p = n->arg->as<UnaryNode>();
    if (!p || p->op != UnaryOp::IsPhi) return false;
    out.push_back(p->arg);
    return true;
}

} // namespace detail

/// Replaces If(not-phi guards, e, phi) by e when e is already phi wherever a guarded
/// operand is.
inline ir::Expr drop_phi_guards(const ir::Expr& e) {
    using namespace ir;
    return rewrite(e, [](const Expr& n) -> Expr {
        const auto* i = n->as<IfNode>();
        if (!i) return nullptr;
        const auto* els = i->else_branch->as<ConstNode>();
        if (!els || !els->value.is_phi()) return nullptr;
        std::vector<Expr> guarded;
        if (!detail::phi_guards(i->cond, guarded)) return nullptr;
        for (const auto& x : guarded) {
            if (!detail::strict_in(i->then_branch, x)) return nullptr;
        }
        return i->then_branch;
    });
}

inline ir::Query fold_constants(ir::Query q) {
    for (auto& d : q.defs) d.body = fold_constants(d.body);
    return q;
}

/// Constant folding, then guard elimination, on every def.
inline ir::Query simplify(ir::Query q) {
    for (auto& d : q.defs) d.body = drop_phi_guards(fold_constants(d.body));
    return q;
}

/// Inlines producers into all their consumers until no producer can be inlined
/// everywhere, then drops dead defs, simplifies and re-resolves boundaries.
inline ir::Query fuse(ir::Query q) {
    for (bool changed = true; changed;) {
        changed = false;
        q = ir::sorted(std::move(q));
        for (const auto& producer : q.defs) {
            if (producer.name == q.output) continue;
            std::vector<std::pair<std::size_t, ir::Expr>> rewritten;
            bool all = true;
            for (std::size_t j = 0; j < q.defs.size() && all; ++j) {
                const auto& host = q.defs[j];
                if (ir::reference_count(host.body, producer.name) == 0) continue;
                auto body = detail::inline_into(host.body, host.domain.precision, producer);
                if (!body) {
                    all = false;
                } else {
                    rewritten.emplace_back(j, *body);
                }
            }
            if (!all || rewritten.empty()) continue;
            for (auto& [j, body] : rewritten) q.defs[j].body = std::move(body);
            const std::string gone = producer.name;
            std::erase_if(q.defs, [&](const ir::TemporalDef& d) { return d.name == gone; });
            changed = true;
            break;
        }
    }
    return resolve_boundaries(simplify(eliminate_dead_defs(std::move(q))));
}

} // namespace tilt::passes
