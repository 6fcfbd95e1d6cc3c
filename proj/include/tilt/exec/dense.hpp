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

// Dense evaluation: every def is evaluated at every grid point of its domain, literally
// per the IR. This is the reference the kernel and the parallel runtime are checked
// against, so it favors directness over speed.

#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>

#include "tilt/core/snapshot_buffer.hpp"
#include "tilt/exec/reduction.hpp"
#include "tilt/ir/query.hpp"

namespace tilt::exec {

/// Named input buffers.
using Inputs = std::map<std::string, SnapshotView>;

/// Concrete (start, end] of a def for the partition (ts, te].
inline std::pair<Time, Time> concrete_range(const ir::TimeDomain& d, Time ts, Time te) {
    return {d.start.resolve(ts, te, ts), d.end.resolve(ts, te, te)};
}

/// Grid points g with start < g <= end, as [first, last]; first > last when empty.
inline std::pair<Ticks, Ticks> grid_points(Time start, Time end, Ticks precision) {
    return {grid_ceil(start.ticks() + 1, precision), grid_floor(end.ticks(), precision)};
}

namespace detail {

class DenseEvaluator {
  public:
    DenseEvaluator(const ir::Query& q, const Inputs& inputs) : q_(q) {
        for (const auto& [k, v] : inputs) env_[k] = v;
    }

    /// Evaluates every def on its domain for (ts, te]; returns the buffers by name.
    std::map<std::string, SnapshotBuffer> run(Time ts, Time te) {
        std::map<std::string, SnapshotBuffer> out;
        for (auto i : ir::topo_order(q_)) {
            const auto& d = q_.defs[i];
            auto [start, end] = concrete_range(d.domain, ts, te);
            const Ticks p = d.domain.precision;
            SnapshotBuffer buf(start);
            auto [first, last] = grid_points(start, end, p);
            for (Ticks g = first; g <= last; g += p) buf.append_merged(Time(g), eval(d.body, g, nullptr));
            auto [it, fresh] = out.emplace(d.name, std::move(buf));
            env_[d.name] = it->second.view();
        }
        return out;
    }

  private:
    const SnapshotView& source(const std::string& name) const {
        auto it = env_.find(name);
        if (it == env_.end()) throw EvalError("no buffer bound for ~" + name);
        return it->second;
    }

    const ReductionSpec& spec(const std::string& name) {
        auto it = specs_.find(name);
        if (it == specs_.end()) it = specs_.emplace(name, ReductionRegistry::global().find(name)).first;
        if (!it->second) throw EvalError("unknown reduction '" + name + "'");
        return *it->second;
    }

    ValueSet eval(const ir::Expr& e, Ticks g, const ValueSet* elem) {
        using namespace ir;
        if (const auto* c = e->as<ConstNode>()) return c->value;
        if (e->is<TimeVarNode>()) return Value::integer(g);
        if (e->is<ElemNode>()) {
            if (!elem) throw EvalError("element reference outside a reduce map");
            return *elem;
        }
        if (const auto* b = e->as<BinaryNode>()) {
            ValueSet l = eval(b->lhs, g, elem), r = eval(b->rhs, g, elem);
            return lift(l, r, [op = b->op](const Value& x, const Value& y) { return apply(op, x, y); });
        }
        if (const auto* u = e->as<UnaryNode>()) {
            ValueSet a = eval(u->arg, g, elem);
            return lift(a, [u](const Value& x) { return apply(u->op, x, u->field); });
        }
        if (const auto* i = e->as<IfNode>()) {
            ValueSet c = eval(i->cond, g, elem);
            if (c.is_single()) {
                const Value& cv = c.single();
                if (cv.is_phi()) return {};
                if (cv.kind() != ValueKind::Bool) throw EvalError("if condition is not a bool");
                return eval(cv.as_bool() ? i->then_branch : i->else_branch, g, elem);
            }
            ValueSet args[3] = {c, eval(i->then_branch, g, elem), eval(i->else_branch, g, elem)};
            return lift_n(std::span<const ValueSet>(args), [](std::span<const Value> v) -> Value {
                if (v[0].is_phi()) return {};
                return v[0].as_bool() ? v[1] : v[2];
            });
        }
        if (const auto* x = e->as<IndexNode>()) {
            auto c = affine_offset(x->time);
            if (!c) throw EvalError("non-affine index time for ~" + x->source);
            return source(x->source).value_at(Time(g + *c));
        }
        if (const auto* r = e->as<ReduceNode>()) {
            const auto* s = r->window->as<SliceNode>();
            if (!s) throw EvalError("reduce operand must be a slice");
            const SnapshotView& buf = source(s->source);
            Time from(g + s->lo), to(g + s->hi);
            if (!r->map) return reduce_window(spec(r->reduction), buf, from, to);
            return reduce_runs(spec(r->reduction), buf, from, to,
                               [&](const ValueSet& v) { return eval(r->map, g, &v); });
        }
        if (const auto* c = e->as<CallNode>()) {
            auto fn = FunctionRegistry::global().find(c->fn);
            if (!fn) throw EvalError("unknown function '" + c->fn + "'");
            std::vector<ValueSet> args;
            args.reserve(c->args.size());
            for (const auto& a : c->args) args.push_back(eval(a, g, elem));
            return lift_n(std::span<const ValueSet>(args),
                          [&](std::span<const Value> v) { return ir::call_function(*fn, v); });
        }
        throw EvalError("slice outside a reduce");
    }

    const ir::Query& q_;
    std::map<std::string, SnapshotView> env_;
    std::unordered_map<std::string, std::shared_ptr<const ReductionSpec>> specs_;
};

} // namespace detail

/// Every def's buffer over its domain for the partition (ts, te].
inline std::map<std::string, SnapshotBuffer> eval_dense_all(const ir::Query& q, const Inputs& inputs, Time ts,
                                                            Time te) {
    detail::DenseEvaluator ev(q, inputs);
    return ev.run(ts, te);
}

/// The output def's buffer for (ts, te]. Inputs must cover (ts - lookback, te + lookahead].
inline SnapshotBuffer eval_dense(const ir::Query& q, const Inputs& inputs, Time ts, Time te) {
    auto all = eval_dense_all(q, inputs, ts, te);
    auto it = all.find(q.output);
    if (it == all.end()) throw EvalError("output ~" + q.output + " was not evaluated");
    return std::move(it->second);
}

} // namespace tilt::exec
