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

// Change-point loop kernels.
//
// Each def becomes one loop over its grid points. Reads of other temporal objects are
// leaves with a cursor into the source buffer: an Index leaf tracks the snapshot holding
// t + c, a window leaf tracks the snapshots meeting (t + lo, t + hi] as a deque of
// coalesced runs. After computing the body at t, the loop jumps to the earliest grid point
// at which some leaf can change, so the emitted snapshot covers every grid point skipped.

#pragma once

#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilt/exec/dense.hpp"
#include "tilt/exec/reduction.hpp"
#include "tilt/ir/query.hpp"
#include "tilt/ir/sexpr.hpp"

namespace tilt::exec {

class SynthesisError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct KernelOptions {
    /// Slide invertible reductions with deacc instead of refolding on every change.
    bool subtract_on_evict = true;
    /// Evaluate structurally equal subexpressions once per iteration.
    bool share_subexpressions = true;
};

/// Loop iterations per def, filled by KernelPlan::run.
struct KernelStats {
    std::map<std::string, std::uint64_t> iterations;

    [[nodiscard]] std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& [k, v] : iterations) n += v;
        return n;
    }
};

namespace detail {

inline constexpr Ticks kNever = std::numeric_limits<Ticks>::max();

struct Slot {
    enum class Op : std::uint8_t { Const, Time, Elem, Index, Window, Binary, Unary, If, Call } op = Op::Const;
    ValueSet value;
    BinaryOp bop = BinaryOp::Add;
    UnaryOp uop = UnaryOp::Neg;
    std::string field;
    std::shared_ptr<const ir::ScalarFunction> fn;
    std::size_t leaf = 0;
    std::vector<std::size_t> kids;
};

/// Straight-line slots with children before parents; root is the last slot.
struct Program {
    std::vector<Slot> slots;
    std::size_t root = 0;
};

struct IndexLeaf {
    std::size_t source = 0;
    Ticks offset = 0;
};

struct WindowLeaf {
    std::size_t source = 0;
    Ticks lo = 0, hi = 0;
    std::shared_ptr<const ReductionSpec> spec;
    /// Index into Loop::maps, or -1 for the identity.
    int map = -1;
};

struct Loop {
    std::string name;
    ir::TimeDomain domain;
    std::size_t target = 0;
    Program body;
    std::vector<IndexLeaf> index_leaves;
    std::vector<WindowLeaf> window_leaves;
    std::vector<Program> maps;
    bool reads_time = false;
};

class LoopCompiler {
  public:
    LoopCompiler(Loop& loop, const std::map<std::string, std::size_t>& sources, bool share)
        : loop_(loop), sources_(sources), share_(share) {}

    Program compile_body(const ir::Expr& e) {
        Program p;
        memo_.clear();
        p.root = emit(p, e, false);
        return p;
    }

  private:
    std::size_t source_of(const std::string& name) const {
        auto it = sources_.find(name);
        if (it == sources_.end()) throw SynthesisError("unbound temporal ~" + name);
        return it->second;
    }

    std::size_t push(Program& p, Slot s, const std::string& key) {
        if (share_) {
            if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        }
        p.slots.push_back(std::move(s));
        std::size_t id = p.slots.size() - 1;
        if (share_) memo_.emplace(key, id);
        return id;
    }

    std::string kids_key(const std::vector<std::size_t>& kids) const {
        std::string k;
        for (auto c : kids) k += "," + std::to_string(c);
        return k;
    }

    std::size_t emit(Program& p, const ir::Expr& e, bool in_map) {
        using namespace ir;
        using Op = Slot::Op;
        Slot s;
        if (const auto* c = e->as<ConstNode>()) {
            s.op = Op::Const;
            s.value = c->value;
            // Floats print with shortest round-trip digits, so the key identifies the bits.
            return push(p, std::move(s), "c" + std::to_string(static_cast<int>(c->value.kind())) + to_string(c->value));
        }
        if (e->is<TimeVarNode>()) {
            if (in_map) throw SynthesisError("domain variable inside a reduce map");
            loop_.reads_time = true;
            s.op = Op::Time;
            return push(p, std::move(s), "t");
        }
        if (e->is<ElemNode>()) {
            if (!in_map) throw SynthesisError("element reference outside a reduce map");
            s.op = Op::Elem;
            return push(p, std::move(s), "e");
        }
        if (const auto* b = e->as<BinaryNode>()) {
            s.op = Op::Binary;
            s.bop = b->op;
            s.kids = {emit(p, b->lhs, in_map), emit(p, b->rhs, in_map)};
            auto key = "b" + std::to_string(static_cast<int>(b->op)) + kids_key(s.kids);
            return push(p, std::move(s), key);
        }
        if (const auto* u = e->as<UnaryNode>()) {
            s.op = Op::Unary;
            s.uop = u->op;
            s.field = u->field;
            s.kids = {emit(p, u->arg, in_map)};
            auto key = "u" + std::to_string(static_cast<int>(u->op)) + u->field + kids_key(s.kids);
            return push(p, std::move(s), key);
        }
        if (const auto* i = e->as<IfNode>()) {
            s.op = Op::If;
            s.kids = {emit(p, i->cond, in_map), emit(p, i->then_branch, in_map), emit(p, i->else_branch, in_map)};
            auto key = "i" + kids_key(s.kids);
            return push(p, std::move(s), key);
        }
        if (const auto* c = e->as<CallNode>()) {
            s.op = Op::Call;
            s.fn = FunctionRegistry::global().find(c->fn);
            if (!s.fn) throw SynthesisError("unknown function '" + c->fn + "'");
            for (const auto& a : c->args) s.kids.push_back(emit(p, a, in_map));
            auto key = "f" + c->fn + kids_key(s.kids);
            return push(p, std::move(s), key);
        }
        if (const auto* x = e->as<IndexNode>()) {
            if (in_map) throw SynthesisError("temporal read inside a reduce map");
            auto c = affine_offset(x->time);
            if (!c) throw SynthesisError("non-affine index time for ~" + x->source);
            std::size_t src = source_of(x->source);
            s.op = Op::Index;
            s.leaf = index_leaf(src, *c);
            auto key = "x" + std::to_string(s.leaf);
            return push(p, std::move(s), key);
        }
        if (const auto* r = e->as<ReduceNode>()) {
            if (in_map) throw SynthesisError("nested reduce inside a reduce map");
            const auto* sl = r->window->as<SliceNode>();
            if (!sl) throw SynthesisError("reduce operand must be a slice");
            WindowLeaf w;
            w.source = source_of(sl->source);
            w.lo = sl->lo;
            w.hi = sl->hi;
            w.spec = ReductionRegistry::global().find(r->reduction);
            if (!w.spec) throw SynthesisError("unknown reduction '" + r->reduction + "'");
            std::string map_key = r->map ? ir::print(r->map) : "";
            std::string key = "w" + std::to_string(w.source) + ":" + std::to_string(w.lo) + ":" + std::to_string(w.hi) +
                              ":" + r->reduction + ":" + map_key;
            if (share_) {
                if (auto it = memo_.find(key); it != memo_.end()) return it->second;
            }
            if (r->map) {
                LoopCompiler sub(loop_, sources_, share_);
                Program mp;
                mp.root = sub.emit(mp, r->map, true);
                loop_.maps.push_back(std::move(mp));
                w.map = static_cast<int>(loop_.maps.size() - 1);
            }
            loop_.window_leaves.push_back(std::move(w));
            s.op = Op::Window;
            s.leaf = loop_.window_leaves.size() - 1;
            return push(p, std::move(s), key);
        }
        throw SynthesisError("slice outside a reduce");
    }

    std::size_t index_leaf(std::size_t src, Ticks offset) {
        if (share_) {
            for (std::size_t i = 0; i < loop_.index_leaves.size(); ++i) {
                if (loop_.index_leaves[i].source == src && loop_.index_leaves[i].offset == offset) return i;
            }
        }
        loop_.index_leaves.push_back({src, offset});
        return loop_.index_leaves.size() - 1;
    }

    Loop& loop_;
    const std::map<std::string, std::size_t>& sources_;
    bool share_;
    std::map<std::string, std::size_t> memo_;
};

/// Evaluates a Program once per iteration, memoizing slots; If evaluates only the branch
/// its condition selects.
class ProgramEval {
  public:
    explicit ProgramEval(const Program& p) : p_(p), vals_(p.slots.size()), stamp_(p.slots.size(), 0) {}

    template <class Leaves>
    const ValueSet& run(Leaves& leaves, Ticks t, const ValueSet* elem) {
        ++epoch_;
        return eval(p_.root, leaves, t, elem);
    }

  private:
    template <class Leaves>
    const ValueSet& eval(std::size_t i, Leaves& leaves, Ticks t, const ValueSet* elem) {
        if (stamp_[i] == epoch_) return vals_[i];
        const Slot& s = p_.slots[i];
        using Op = Slot::Op;
        ValueSet out;
        switch (s.op) {
        case Op::Const: out = s.value; break;
        case Op::Time: out = Value::integer(t); break;
        case Op::Elem: out = *elem; break;
        case Op::Index: out = leaves.index_value(s.leaf); break;
        case Op::Window: out = leaves.window_value(s.leaf); break;
        case Op::Binary: {
            const ValueSet& a = eval(s.kids[0], leaves, t, elem);
            const ValueSet& b = eval(s.kids[1], leaves, t, elem);
            if (a.is_single() && b.is_single()) {
                out = apply(s.bop, a.single(), b.single());
            } else {
                out = lift(a, b, [op = s.bop](const Value& x, const Value& y) { return apply(op, x, y); });
            }
            break;
        }
        case Op::Unary: {
            const ValueSet& a = eval(s.kids[0], leaves, t, elem);
            if (a.is_single()) {
                out = apply(s.uop, a.single(), s.field);
            } else {
                out = lift(a, [&s](const Value& x) { return apply(s.uop, x, s.field); });
            }
            break;
        }
        case Op::If: {
            const ValueSet& c = eval(s.kids[0], leaves, t, elem);
            if (c.is_single()) {
                const Value& cv = c.single();
                if (cv.is_phi()) break;
                if (cv.kind() != ValueKind::Bool) throw EvalError("if condition is not a bool");
                out = eval(cv.as_bool() ? s.kids[1] : s.kids[2], leaves, t, elem);
                break;
            }
            ValueSet args[3] = {c, eval(s.kids[1], leaves, t, elem), eval(s.kids[2], leaves, t, elem)};
            out = lift_n(std::span<const ValueSet>(args), [](std::span<const Value> v) -> Value {
                if (v[0].is_phi()) return {};
                return v[0].as_bool() ? v[1] : v[2];
            });
            break;
        }
        case Op::Call: {
            std::vector<ValueSet> args;
            args.reserve(s.kids.size());
            for (auto k : s.kids) args.push_back(eval(k, leaves, t, elem));
            out = lift_n(std::span<const ValueSet>(args),
                         [&s](std::span<const Value> v) { return ir::call_function(*s.fn, v); });
            break;
        }
        }
        vals_[i] = std::move(out);
        stamp_[i] = epoch_;
        return vals_[i];
    }

    const Program& p_;
    std::vector<ValueSet> vals_;
    std::vector<std::uint64_t> stamp_;
    std::uint64_t epoch_ = 0;
};

/// Leaves bound to no temporal source, for evaluating reduce maps.
struct NoLeaves {
    const ValueSet& index_value(std::size_t) { throw SynthesisError("temporal read inside a reduce map"); }
    const ValueSet& window_value(std::size_t) { throw SynthesisError("reduce inside a reduce map"); }
};

/// Cursor state of one loop's leaves during a run.
class LeafState {
  public:
    LeafState(const Loop& loop, const std::vector<SnapshotView>& sources, bool subtract_on_evict)
        : loop_(loop), idx_(loop.index_leaves.size()), win_(loop.window_leaves.size()) {
        for (std::size_t i = 0; i < idx_.size(); ++i) idx_[i].buf = &sources[loop.index_leaves[i].source];
        for (std::size_t i = 0; i < win_.size(); ++i) {
            const auto& w = loop.window_leaves[i];
            win_[i].buf = &sources[w.source];
            win_[i].st = w.spec->init;
            // A window that never overlaps its predecessor gains nothing from deacc, and
            // recomputing keeps its result independent of where a partition starts.
            win_[i].incremental = subtract_on_evict && w.spec->invertible() && w.hi - w.lo > loop.domain.precision;
            if (w.map >= 0) maps_.emplace_back(std::make_unique<ProgramEval>(loop.maps[static_cast<std::size_t>(w.map)]));
            else maps_.emplace_back(nullptr);
        }
    }

    /// Positions every leaf at grid point t; t never decreases between calls.
    void advance(Ticks t) {
        for (std::size_t i = 0; i < idx_.size(); ++i) advance_index(i, t);
        for (std::size_t i = 0; i < win_.size(); ++i) slide_window(i, t);
    }

    /// Earliest tick after t at which some leaf may change, or kNever.
    [[nodiscard]] Ticks next_change(Ticks t) const {
        Ticks n = loop_.reads_time ? t + 1 : kNever;
        for (std::size_t i = 0; i < idx_.size(); ++i) {
            const auto& s = idx_[i];
            if (s.pos < s.buf->size()) n = std::min(n, (*s.buf)[s.pos].ts.ticks() + 1 - loop_.index_leaves[i].offset);
        }
        for (std::size_t i = 0; i < win_.size(); ++i) {
            const auto& w = win_[i];
            const auto& leaf = loop_.window_leaves[i];
            const SnapshotView& b = *w.buf;
            // The front run leaves once the window start reaches its end.
            if (w.front < b.size()) n = std::min(n, b[w.front].ts.ticks() - leaf.lo);
            // The next run enters once the window end passes its start.
            if (w.back < b.size()) n = std::min(n, run_start(b, w.back) - leaf.hi + 1);
        }
        return n;
    }

    const ValueSet& index_value(std::size_t i) {
        const auto& s = idx_[i];
        return s.pos < s.buf->size() ? (*s.buf)[s.pos].val : SnapshotView::phi_set();
    }

    const ValueSet& window_value(std::size_t i) {
        auto& w = win_[i];
        if (w.dirty) {
            const ReductionSpec& spec = *loop_.window_leaves[i].spec;
            if (!w.incremental) {
                w.st = spec.init;
                for (const auto& r : w.runs) accumulate(spec, w.st, r.val);
            }
            w.result = finish(spec, w.st);
            w.dirty = false;
        }
        return w.result;
    }

  private:
    struct IndexCursor {
        const SnapshotView* buf = nullptr;
        std::size_t pos = 0;
    };
    struct Run {
        ValueSet val;
        std::size_t last = 0;
    };
    struct WindowCursor {
        const SnapshotView* buf = nullptr;
        /// Snapshots [front, back) meet the window.
        std::size_t front = 0, back = 0;
        std::deque<Run> runs;
        ReduceState st;
        ValueSet result;
        bool incremental = false;
        bool dirty = true;
    };

    static Ticks run_start(const SnapshotView& b, std::size_t j) {
        return j == 0 ? b.base().ticks() : b[j - 1].ts.ticks();
    }

    void advance_index(std::size_t i, Ticks t) {
        auto& s = idx_[i];
        const Ticks x = t + loop_.index_leaves[i].offset;
        if (Time(x) <= s.buf->base()) {
            throw CoverageError("time " + std::to_string(x) + " is not after buffer base " + to_string(s.buf->base()));
        }
        while (s.pos < s.buf->size() && (*s.buf)[s.pos].ts.ticks() < x) ++s.pos;
    }

    ValueSet mapped(std::size_t i, const ValueSet& v) {
        ProgramEval* m = maps_[i].get();
        if (!m) return v;
        NoLeaves none;
        return m->run(none, 0, &v);
    }

    void slide_window(std::size_t i, Ticks t) {
        auto& w = win_[i];
        const auto& leaf = loop_.window_leaves[i];
        const ReductionSpec& spec = *leaf.spec;
        const SnapshotView& b = *w.buf;
        const Ticks from = t + leaf.lo, to = t + leaf.hi;
        if (Time(from) < b.base()) {
            throw CoverageError("window start " + std::to_string(from) + " precedes buffer base " + to_string(b.base()));
        }
        std::size_t front = w.front, back = w.back;
        while (front < b.size() && b[front].ts.ticks() <= from) ++front;
        back = std::max(back, front);
        while (back < b.size() && run_start(b, back) < to) ++back;

        if (front >= w.back) {
            // Disjoint from the previous window: start over.
            if (!w.runs.empty()) w.dirty = true;
            w.runs.clear();
            w.st = spec.init;
        } else {
            while (!w.runs.empty() && w.runs.front().last < front) {
                if (w.incremental) deaccumulate(spec, w.st, w.runs.front().val);
                w.runs.pop_front();
                w.dirty = true;
            }
        }
        for (std::size_t j = std::max(w.back, front); j < back; ++j) {
            ValueSet v = mapped(i, b[j].val);
            if (!w.runs.empty() && w.runs.back().last + 1 == j && w.runs.back().val == v) {
                w.runs.back().last = j;
                continue;
            }
            if (w.incremental) accumulate(spec, w.st, v);
            w.runs.push_back({std::move(v), j});
            w.dirty = true;
        }
        w.front = front;
        w.back = back;
    }

    const Loop& loop_;
    std::vector<IndexCursor> idx_;
    std::vector<WindowCursor> win_;
    std::vector<std::unique_ptr<ProgramEval>> maps_;
};

} // namespace detail

/// Chained loops, one per def, callable on any partition (Ts, Te]. Invocations are
/// independent and may run concurrently.
class KernelPlan {
  public:
    KernelPlan() = default;

    /// The output buffer for (ts, te]. Inputs must cover (ts - lookback, te + lookahead].
    SnapshotBuffer run(const Inputs& inputs, Time ts, Time te, KernelStats* stats = nullptr) const {
        std::vector<SnapshotView> views(source_names_.size());
        for (std::size_t i = 0; i < input_count_; ++i) {
            auto it = inputs.find(source_names_[i]);
            if (it == inputs.end()) throw CoverageError("no buffer for input ~" + source_names_[i]);
            views[i] = it->second;
        }
        std::vector<SnapshotBuffer> outs(loops_.size());
        for (std::size_t li = 0; li < loops_.size(); ++li) {
            const detail::Loop& loop = loops_[li];
            auto [start, end] = concrete_range(loop.domain, ts, te);
            outs[li] = run_loop(loop, views, start, end, stats);
            views[loop.target] = outs[li].view();
        }
        return std::move(outs.back());
    }

    [[nodiscard]] std::size_t loop_count() const { return loops_.size(); }
    [[nodiscard]] const std::vector<std::string>& loop_names() const { return loop_names_; }
    [[nodiscard]] const KernelOptions& options() const { return opts_; }

    /// Body slots of each loop after subexpression sharing.
    [[nodiscard]] std::vector<std::size_t> slot_counts() const {
        std::vector<std::size_t> n;
        for (const auto& l : loops_) n.push_back(l.body.slots.size());
        return n;
    }

    /// First grid point after `ts` at which def `name` may change, capped at `te`. The
    /// leaves are positioned at ts; sources named in `bufs` must include every read.
    Time next_change(const std::string& name, const std::map<std::string, SnapshotView>& bufs, Time ts,
                     Time te) const {
        for (const auto& loop : loops_) {
            if (loop.name != name) continue;
            std::vector<SnapshotView> views(source_names_.size());
            for (std::size_t i = 0; i < source_names_.size(); ++i) {
                if (auto it = bufs.find(source_names_[i]); it != bufs.end()) views[i] = it->second;
            }
            detail::LeafState leaves(loop, views, opts_.subtract_on_evict);
            leaves.advance(ts.ticks());
            Ticks n = leaves.next_change(ts.ticks());
            if (n == detail::kNever || n >= te.ticks()) return te;
            return std::min(te, Time(grid_ceil(n, loop.domain.precision)));
        }
        throw SynthesisError("no loop for ~" + name);
    }

  private:
    friend KernelPlan synthesize_kernel(const ir::Query& q, KernelOptions opts);

    static SnapshotBuffer run_loop(const detail::Loop& loop, const std::vector<SnapshotView>& views, Time start,
                                   Time end, KernelStats* stats) {
        const Ticks p = loop.domain.precision;
        auto [first, last] = grid_points(start, end, p);
        SnapshotBuffer out(start);
        detail::LeafState leaves(loop, views, true);
        detail::ProgramEval body(loop.body);
        std::uint64_t iters = 0;
        for (Ticks t = first; t <= last;) {
            leaves.advance(t);
            ValueSet v = body.run(leaves, t, nullptr);
            Ticks n = leaves.next_change(t);
            ++iters;
            Ticks next = n == detail::kNever || n > last ? kEnd : grid_ceil(n, p);
            out.append_merged(Time(next == kEnd ? last : std::min(next - p, last)), std::move(v));
            if (next == kEnd) break;
            t = next;
        }
        if (stats) stats->iterations[loop.name] += iters;
        return out;
    }

    static constexpr Ticks kEnd = detail::kNever;

    KernelOptions opts_;
    std::vector<std::string> source_names_;
    std::size_t input_count_ = 0;
    std::vector<detail::Loop> loops_;
    std::vector<std::string> loop_names_;
};

/// One loop per def in dependency order; the output def's loop runs last and defs it does
/// not read are dropped. Throws SynthesisError on IR the kernel cannot execute.
inline KernelPlan synthesize_kernel(const ir::Query& q, KernelOptions opts = {}) {
    auto diags = ir::diagnose(q);
    if (!diags.empty()) throw SynthesisError(ir::ValidationError(std::move(diags)).what());
    KernelPlan plan;
    plan.opts_ = opts;
    std::map<std::string, std::size_t> sources;
    for (const auto& in : q.inputs) {
        sources[in.name] = plan.source_names_.size();
        plan.source_names_.push_back(in.name);
    }
    plan.input_count_ = plan.source_names_.size();

    // Keep only what the output reads, in dependency order, output last.
    std::set<std::string> live{q.output};
    auto order = ir::topo_order(q);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (!live.count(q.defs[*it].name)) continue;
        for (const auto& r : ir::references(q.defs[*it].body)) live.insert(r);
    }
    for (auto i : order) {
        const auto& d = q.defs[i];
        if (!live.count(d.name)) continue;
        detail::Loop loop;
        loop.name = d.name;
        loop.domain = d.domain;
        loop.target = plan.source_names_.size();
        detail::LoopCompiler comp(loop, sources, opts.share_subexpressions);
        loop.body = comp.compile_body(d.body);
        sources[d.name] = loop.target;
        plan.source_names_.push_back(d.name);
        plan.loop_names_.push_back(d.name);
        plan.loops_.push_back(std::move(loop));
    }
    if (plan.loops_.empty() || plan.loops_.back().name != q.output) {
        throw SynthesisError("output ~" + q.output + " does not come last in dependency order");
    }
    return plan;
}

} // namespace tilt::exec
