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
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tilt/exec/reduction.hpp"
#include "tilt/ir/expr.hpp"
#include "tilt/ir/functions.hpp"

namespace tilt::ir {

/// One end of a time domain: unbounded, a fixed tick, or an offset from the symbolic
/// partition start Ts or end Te.
struct Bound {
    enum class Kind : std::uint8_t { Unbounded, Fixed, Start, End };
    Kind kind = Kind::Unbounded;
    Ticks offset = 0;

    static Bound unbounded() { return {}; }
    static Bound fixed(Ticks t) { return {Kind::Fixed, t}; }
    static Bound start(Ticks off = 0) { return {Kind::Start, off}; }
    static Bound end(Ticks off = 0) { return {Kind::End, off}; }

    /// Concrete tick for a partition (ts, te]; Unbounded maps to `fallback`.
    [[nodiscard]] Time resolve(Time ts, Time te, Time fallback) const {
        switch (kind) {
        case Kind::Fixed: return Time(offset);
        case Kind::Start: return ts + offset;
        case Kind::End: return te + offset;
        default: return fallback;
        }
    }

    friend bool operator==(const Bound&, const Bound&) = default;
};

/// (start, end] sampled on multiples of `precision`.
struct TimeDomain {
    Bound start, end;
    Ticks precision = 1;

    static TimeDomain unbounded(Ticks precision = 1) { return {Bound::unbounded(), Bound::unbounded(), precision}; }
    /// (Ts + lo, Te + hi].
    static TimeDomain symbolic(Ticks lo, Ticks hi, Ticks precision = 1) {
        return {Bound::start(lo), Bound::end(hi), precision};
    }
    [[nodiscard]] bool is_symbolic() const { return start.kind == Bound::Kind::Start && end.kind == Bound::Kind::End; }

    friend bool operator==(const TimeDomain&, const TimeDomain&) = default;
};

/// Payload schema of a declared input. A struct schema lists its fields.
struct Schema {
    ValueKind kind = ValueKind::Float;
    std::vector<std::pair<std::string, ValueKind>> fields;

    static Schema scalar(ValueKind k) { return {k, {}}; }
    static Schema record(std::vector<std::pair<std::string, ValueKind>> f) { return {ValueKind::Struct, std::move(f)}; }

    friend bool operator==(const Schema&, const Schema&) = default;
};

struct InputDecl {
    std::string name;
    Schema schema;

    friend bool operator==(const InputDecl&, const InputDecl&) = default;
};

struct TemporalDef {
    std::string name;
    TimeDomain domain;
    Expr body;
};

struct Query {
    std::vector<InputDecl> inputs;
    std::vector<TemporalDef> defs;
    std::string output;
    /// Ticks of history before Ts each input must cover; filled by boundary resolution.
    std::map<std::string, Ticks> lookback;
    /// Ticks past Te each input must cover; filled by boundary resolution.
    std::map<std::string, Ticks> lookahead;

    [[nodiscard]] const TemporalDef* find_def(const std::string& name) const {
        for (const auto& d : defs) {
            if (d.name == name) return &d;
        }
        return nullptr;
    }
    [[nodiscard]] const InputDecl* find_input(const std::string& name) const {
        for (const auto& i : inputs) {
            if (i.name == name) return &i;
        }
        return nullptr;
    }
    [[nodiscard]] bool is_input(const std::string& name) const { return find_input(name) != nullptr; }

    [[nodiscard]] Ticks max_lookback() const {
        Ticks m = 0;
        for (const auto& [k, v] : lookback) m = std::max(m, v);
        return m;
    }
    [[nodiscard]] Ticks max_lookahead() const {
        Ticks m = 0;
        for (const auto& [k, v] : lookahead) m = std::max(m, v);
        return m;
    }
};

/// Bodies structurally equal, domains and metadata identical.
inline bool equal(const Query& a, const Query& b) {
    if (a.inputs != b.inputs || a.output != b.output || a.lookback != b.lookback || a.lookahead != b.lookahead ||
        a.defs.size() != b.defs.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.defs.size(); ++i) {
        const auto &x = a.defs[i], &y = b.defs[i];
        if (x.name != y.name || !(x.domain == y.domain) || !equal(x.body, y.body)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Validation.

struct Diagnostic {
    std::string def;
    /// Child indices from the body root, joined by '/'.
    std::string path;
    std::string message;
};

inline std::string to_string(const Diagnostic& d) {
    return d.def + (d.path.empty() ? "" : " @" + d.path) + ": " + d.message;
}

class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(std::vector<Diagnostic> diags)
        : std::runtime_error(render(diags)), diags_(std::move(diags)) {}
    [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const { return diags_; }

  private:
    static std::string render(const std::vector<Diagnostic>& ds) {
        std::string s = "invalid query:";
        for (const auto& d : ds) s += "\n  " + to_string(d);
        return s;
    }
    std::vector<Diagnostic> diags_;
};

namespace detail {
/// Kahn order over defs; defs on or behind a cycle are absent from the result.
inline std::vector<std::size_t> partial_topo_order(const Query& q) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < q.defs.size(); ++i) index[q.defs[i].name] = i;
    std::vector<std::vector<std::size_t>> readers(q.defs.size());
    std::vector<std::size_t> pending(q.defs.size(), 0);
    for (std::size_t i = 0; i < q.defs.size(); ++i) {
        for (const auto& r : references(q.defs[i].body)) {
            auto it = index.find(r);
            if (it == index.end()) continue;
            readers[it->second].push_back(i);
            ++pending[i];
        }
    }
    std::vector<std::size_t> order, ready;
    for (std::size_t i = q.defs.size(); i-- > 0;) {
        if (pending[i] == 0) ready.push_back(i);
    }
    while (!ready.empty()) {
        std::size_t i = ready.back();
        ready.pop_back();
        order.push_back(i);
        for (auto it = readers[i].rbegin(); it != readers[i].rend(); ++it) {
            if (--pending[*it] == 0) ready.push_back(*it);
        }
    }
    return order;
}
} // namespace detail

/// Def indices ordered so that every def follows the defs it reads. Throws
/// std::invalid_argument on a cycle.
inline std::vector<std::size_t> topo_order(const Query& q) {
    auto order = detail::partial_topo_order(q);
    if (order.size() != q.defs.size()) throw std::invalid_argument("cyclic definition");
    return order;
}

/// The same query with defs in dependency order.
inline Query sorted(Query q) {
    auto order = topo_order(q);
    std::vector<TemporalDef> defs;
    defs.reserve(order.size());
    for (auto i : order) defs.push_back(q.defs[i]);
    q.defs = std::move(defs);
    return q;
}

namespace detail {

/// Inferred payload type; Any stands for phi or an unknown call result.
struct Type {
    enum class Kind : std::uint8_t { Any, Bool, Int, Float, Struct } kind = Kind::Any;
    std::vector<std::pair<std::string, ValueKind>> fields;

    static Type of(ValueKind k) {
        switch (k) {
        case ValueKind::Bool: return {Kind::Bool, {}};
        case ValueKind::Int: return {Kind::Int, {}};
        case ValueKind::Float: return {Kind::Float, {}};
        case ValueKind::Struct: return {Kind::Struct, {}};
        default: return {};
        }
    }
    static Type of(const Schema& s) {
        Type t = of(s.kind);
        t.fields = s.fields;
        return t;
    }
    [[nodiscard]] bool numeric() const { return kind == Kind::Any || kind == Kind::Int || kind == Kind::Float; }
    [[nodiscard]] bool boolean() const { return kind == Kind::Any || kind == Kind::Bool; }
};

inline const char* type_name(Type::Kind k) {
    switch (k) {
    case Type::Kind::Bool: return "bool";
    case Type::Kind::Int: return "int";
    case Type::Kind::Float: return "float";
    case Type::Kind::Struct: return "struct";
    default: return "any";
    }
}

class Checker {
  public:
    Checker(const Query& q, std::vector<Diagnostic>& out) : q_(q), out_(out) {}

    Type check_def(const TemporalDef& d) {
        def_ = d.name;
        if (d.domain.precision < 1) report("", "precision must be at least 1");
        if (d.domain.start.kind == Bound::Kind::Fixed && d.domain.end.kind == Bound::Kind::Fixed &&
            d.domain.start.offset >= d.domain.end.offset) {
            report("", "empty fixed domain");
        }
        if (!d.body) {
            report("", "missing body");
            return {};
        }
        return check(d.body, "", nullptr);
    }

    std::map<std::string, Type> types;

  private:
    void report(const std::string& path, std::string msg) { out_.push_back({def_, path, std::move(msg)}); }

    static std::string child(const std::string& path, std::size_t i) {
        return path.empty() ? std::to_string(i) : path + "/" + std::to_string(i);
    }

    Type source_type(const std::string& name, const std::string& path) {
        if (const auto* in = q_.find_input(name)) return Type::of(in->schema);
        if (q_.find_def(name) == nullptr) {
            report(path, "unbound temporal ~" + name);
            return {};
        }
        auto it = types.find(name);
        return it == types.end() ? Type{} : it->second;
    }

    Type check(const Expr& e, const std::string& path, const Type* elem) {
        using K = Type::Kind;
        if (const auto* c = e->as<ConstNode>()) {
            Type t = Type::of(c->value.kind());
            if (c->value.kind() == ValueKind::Struct) {
                for (const auto& [n, v] : c->value.fields()) t.fields.push_back({n, v.kind()});
            }
            return t;
        }
        if (e->is<TimeVarNode>()) return {K::Int, {}};
        if (e->is<ElemNode>()) {
            if (!elem) {
                report(path, "element reference outside a reduce map");
                return {};
            }
            return *elem;
        }
        if (const auto* b = e->as<BinaryNode>()) {
            Type l = check(b->lhs, child(path, 0), elem), r = check(b->rhs, child(path, 1), elem);
            auto mismatch = [&] {
                report(path, std::string("type error: '") + op_name(b->op) + "' on " + type_name(l.kind) + ", " +
                                 type_name(r.kind));
            };
            switch (b->op) {
            case BinaryOp::And:
            case BinaryOp::Or:
                if (!l.boolean() || !r.boolean()) mismatch();
                return {K::Bool, {}};
            case BinaryOp::Eq:
            case BinaryOp::Ne:
                if (l.kind != K::Any && r.kind != K::Any && l.kind != r.kind && !(l.numeric() && r.numeric())) mismatch();
                return {K::Bool, {}};
            case BinaryOp::Lt:
            case BinaryOp::Le:
            case BinaryOp::Gt:
            case BinaryOp::Ge:
                if (!l.numeric() || !r.numeric()) mismatch();
                return {K::Bool, {}};
            case BinaryOp::Div:
                if (!l.numeric() || !r.numeric()) mismatch();
                return {K::Float, {}};
            default:
                if (!l.numeric() || !r.numeric()) mismatch();
                if (l.kind == K::Int && r.kind == K::Int) return {K::Int, {}};
                if (l.kind == K::Float || r.kind == K::Float) return {K::Float, {}};
                return {};
            }
        }
        if (const auto* u = e->as<UnaryNode>()) {
            Type a = check(u->arg, child(path, 0), elem);
            auto bad = [&] { report(path, std::string("type error: '") + op_name(u->op) + "' on " + type_name(a.kind)); };
            switch (u->op) {
            case UnaryOp::IsPhi: return {K::Bool, {}};
            case UnaryOp::Not:
                if (!a.boolean()) bad();
                return {K::Bool, {}};
            case UnaryOp::Sqrt:
            case UnaryOp::ToFloat:
                if (!a.numeric()) bad();
                return {K::Float, {}};
            case UnaryOp::Field: {
                if (a.kind != K::Any && a.kind != K::Struct) {
                    bad();
                    return {};
                }
                for (const auto& [n, k] : a.fields) {
                    if (n == u->field) return Type::of(k);
                }
                if (!a.fields.empty()) report(path, "no field '" + u->field + "'");
                return {};
            }
            default:
                if (!a.numeric()) bad();
                return a.kind == K::Struct || a.kind == K::Bool ? Type{} : Type{a.kind, {}};
            }
        }
        if (const auto* i = e->as<IfNode>()) {
            Type c = check(i->cond, child(path, 0), elem);
            if (!c.boolean()) report(path, std::string("type error: condition is ") + type_name(c.kind));
            Type a = check(i->then_branch, child(path, 1), elem), b = check(i->else_branch, child(path, 2), elem);
            if (a.kind == K::Any) return b;
            if (b.kind == K::Any || a.kind == b.kind) return a;
            if (a.numeric() && b.numeric()) return {};
            report(path, std::string("type error: branches are ") + type_name(a.kind) + " and " + type_name(b.kind));
            return {};
        }
        if (const auto* x = e->as<IndexNode>()) {
            if (elem) report(path, "temporal reference inside a reduce map");
            if (!affine_offset(x->time)) report(path, "non-constant offset in index of ~" + x->source);
            check(x->time, child(path, 0), elem);
            return source_type(x->source, path);
        }
        if (e->is<SliceNode>()) {
            report(path, "slice outside a reduce");
            return {};
        }
        if (const auto* r = e->as<ReduceNode>()) {
            if (elem) report(path, "nested reduce inside a reduce map");
            auto spec = ReductionRegistry::global().find(r->reduction);
            if (!spec) report(path, "unknown reduction '" + r->reduction + "'");
            const auto* s = r->window->as<SliceNode>();
            if (!s) {
                report(child(path, 0), "reduce operand must be a slice");
                return {};
            }
            if (s->lo >= s->hi) report(child(path, 0), "empty slice window");
            Type src = source_type(s->source, child(path, 0));
            if (r->map) src = check(r->map, child(path, 1), &src);
            if (spec && !spec->any_kind && !src.numeric()) {
                report(path, "reduction '" + r->reduction + "' needs numbers, got " + type_name(src.kind));
            }
            if (spec && spec->name == "count") return {K::Int, {}};
            return {K::Float, {}};
        }
        if (const auto* c = e->as<CallNode>()) {
            auto fn = FunctionRegistry::global().find(c->fn);
            if (!fn) {
                report(path, "unknown function '" + c->fn + "'");
            } else if (fn->arity != c->args.size()) {
                report(path, "function '" + c->fn + "' takes " + std::to_string(fn->arity) + " arguments");
            }
            for (std::size_t i = 0; i < c->args.size(); ++i) check(c->args[i], child(path, i), elem);
            return {};
        }
        return {};
    }

    const Query& q_;
    std::vector<Diagnostic>& out_;
    std::string def_;
};

} // namespace detail

/// Structured diagnostics; empty means the query is executable.
inline std::vector<Diagnostic> diagnose(const Query& q) {
    std::vector<Diagnostic> out;
    std::set<std::string> seen;
    for (const auto& in : q.inputs) {
        if (!seen.insert(in.name).second) out.push_back({in.name, "", "duplicate name"});
    }
    for (const auto& d : q.defs) {
        if (!seen.insert(d.name).second) out.push_back({d.name, "", "duplicate name"});
    }
    if (q.find_def(q.output) == nullptr) out.push_back({q.output, "", "output is not a definition"});

    std::vector<std::size_t> order = detail::partial_topo_order(q);
    std::vector<bool> placed(q.defs.size(), false);
    for (auto i : order) placed[i] = true;
    for (std::size_t i = 0; i < q.defs.size(); ++i) {
        if (placed[i]) continue;
        out.push_back({q.defs[i].name, "", "cyclic definition"});
        order.push_back(i);
    }
    detail::Checker checker(q, out);
    for (auto i : order) checker.types[q.defs[i].name] = checker.check_def(q.defs[i]);
    return out;
}

/// Throws ValidationError carrying every diagnostic.
inline void validate(const Query& q) {
    auto d = diagnose(q);
    if (!d.empty()) throw ValidationError(std::move(d));
}

} // namespace tilt::ir
