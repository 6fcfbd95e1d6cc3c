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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "support.hpp"
#include "tilt/exec/dense.hpp"
#include "tilt/exec/kernel.hpp"
#include "tilt/passes/pipeline.hpp"

using namespace tilt;
using namespace tilt::frontend;
using tilt::fixtures::ev;
using tilt::fixtures::snaps;

namespace {

const Value A = Value::real(3.0);
const Value B = Value::real(5.0);

ValueSet real(double d) { return Value::real(d); }

std::vector<Value> random_values(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> d(-4096, 4096);
    std::vector<Value> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(Value::real(d(rng) / 16.0));
    return out;
}

ir::Query single_def(const std::string& input, ir::Expr body, Ticks precision = 1) {
    ir::Query q;
    q.inputs.push_back({input, ir::Schema::scalar(ValueKind::Float)});
    q.defs.push_back({"out", ir::TimeDomain::unbounded(precision), std::move(body)});
    q.output = "out";
    return passes::resolve_boundaries(q);
}

} // namespace

// Reductions

TEST(Reductions, EmptyWindowIsPhiAndBasicsFold) {
    auto& reg = ReductionRegistry::global();
    auto buf = snaps({{1, real(1)}, {2, ValueSet()}, {3, real(2)}, {4, real(3)}}, Time(0));
    EXPECT_EQ(reduce_window(*reg.find("sum"), buf.view(), Time(0), Time(4)), Value::real(6));
    auto empty = snaps({{5, ValueSet()}}, Time(0));
    EXPECT_TRUE(reduce_window(*reg.find("sum"), empty.view(), Time(0), Time(5)).is_phi());
    auto gaps = snaps({{1, real(3)}, {2, ValueSet()}, {3, real(1)}, {4, ValueSet()}, {5, real(7)}}, Time(0));
    EXPECT_EQ(reduce_window(*reg.find("max"), gaps.view(), Time(0), Time(5)), Value::real(7));
}

TEST(Reductions, SlideStateExamples) {
    const auto& sum = *ReductionRegistry::global().find("sum");
    ReduceState st = sum.init;
    for (double v : {1.0, 2.0, 3.0}) accumulate(sum, st, Value::real(v));
    EXPECT_EQ(finish(sum, st), Value::real(6));
    std::vector<Value> ev1{Value::real(1)}, ad{Value::real(4)};
    EXPECT_EQ(finish(sum, slide_state(sum, st, ev1, ad)), Value::real(9));
    std::vector<Value> all{Value::real(1), Value::real(2), Value::real(3)};
    EXPECT_TRUE(finish(sum, slide_state(sum, st, all, {})).is_phi());
}

TEST(Reductions, ResultOfInitIsDefinedForEverySpec) {
    auto& reg = ReductionRegistry::global();
    ASSERT_FALSE(reg.names().empty());
    for (const auto& name : reg.names()) {
        const auto& spec = *reg.find(name);
        EXPECT_NO_THROW({
            Value v = spec.result(spec.init);
            (void)v;
        }) << name;
        EXPECT_TRUE(finish(spec, spec.init).is_phi()) << name;
    }
}

TEST(Reductions, SubtractOnEvictMatchesRecompute) {
    auto& reg = ReductionRegistry::global();
    for (const auto& name : reg.names()) {
        const auto& spec = *reg.find(name);
        if (!spec.invertible()) continue;
        std::mt19937_64 rng(7);
        std::deque<Value> window;
        ReduceState st = spec.init;
        for (int i = 0; i < 1000; ++i) {
            std::vector<Value> evicted, admitted = random_values(rng, rng() % 4);
            std::size_t k = std::min<std::size_t>(window.size(), rng() % 4);
            for (std::size_t j = 0; j < k; ++j) {
                evicted.push_back(window.front());
                window.pop_front();
            }
            for (const auto& v : admitted) window.push_back(v);
            st = slide_state(spec, st, evicted, admitted);
            ReduceState full = spec.init;
            for (const auto& v : window) accumulate(spec, full, v);
            ASSERT_EQ(finish(spec, st), finish(spec, full)) << name << " slide " << i;
        }
    }
}

TEST(Reductions, DeaccInvertsAcc) {
    auto& reg = ReductionRegistry::global();
    for (const auto& name : reg.names()) {
        const auto& spec = *reg.find(name);
        if (!spec.invertible()) continue;
        std::mt19937_64 rng(11);
        ReduceState st = spec.init;
        for (const auto& v : random_values(rng, 50)) accumulate(spec, st, v);
        for (const auto& v : random_values(rng, 50)) {
            ReduceState s2 = st;
            accumulate(spec, s2, v);
            deaccumulate(spec, s2, v);
            EXPECT_EQ(s2, st) << name;
        }
    }
}

TEST(Reductions, CommutativeSpecsIgnoreOrder) {
    auto& reg = ReductionRegistry::global();
    for (const auto& name : reg.names()) {
        const auto& spec = *reg.find(name);
        if (!spec.commutative) continue;
        std::mt19937_64 rng(13);
        // Signed powers of two keep every fold exact, so any difference is order dependence.
        std::vector<Value> vals;
        std::uniform_int_distribution<int> e(-3, 3);
        for (int i = 0; i < 30; ++i) vals.push_back(Value::real((rng() % 2 ? 1 : -1) * std::ldexp(1.0, e(rng))));
        ReduceState ref = spec.init;
        for (const auto& v : vals) accumulate(spec, ref, v);
        for (int i = 0; i < 100; ++i) {
            std::shuffle(vals.begin(), vals.end(), rng);
            ReduceState st = spec.init;
            for (const auto& v : vals) accumulate(spec, st, v);
            EXPECT_EQ(finish(spec, st), finish(spec, ref)) << name;
        }
    }
}

TEST(Reductions, RegistryAcceptsCustomSpecs) {
    auto& reg = ReductionRegistry::global();
    EXPECT_EQ(reg.find("test_range"), nullptr);
    ReductionSpec spec{"test_range", {},
                       [](ReduceState& s, const Value& v) {
                           double x = v.as_number();
                           s.m[0] = s.count == 0 ? x : std::min(s.m[0], x);
                           s.m[1] = s.count == 0 ? x : std::max(s.m[1], x);
                       },
                       [](const ReduceState& s) { return Value::real(s.m[1] - s.m[0]); }, nullptr};
    reg.add(spec);
    auto buf = snaps({{1, real(4)}, {2, real(-1)}, {3, real(2)}}, Time(0));
    EXPECT_EQ(reduce_window(*reg.find("test_range"), buf.view(), Time(0), Time(3)), Value::real(5));
}

// Dense evaluation

TEST(Dense, SelectAddsOne) {
    auto m = events_to_ssbuf(std::vector<Event>{ev(0, 10, Value::integer(3))}, Time(0));
    auto out = exec::eval_dense(single_def("m", ir::at("m") + ir::lit_int(1)), {{"m", m.view()}}, Time(0), Time(10));
    EXPECT_EQ(ssbuf_to_events(out), (std::vector<Event>{ev(0, 10, Value::integer(4))}));
}

TEST(Dense, JoinOverlapOnly) {
    Graph g;
    g.join(g.input("m"), g.input("n"), left() + right());
    auto q = passes::resolve_boundaries(lower(g));
    auto m = events_to_ssbuf(std::vector<Event>{ev(0, 10, A)}, Time(0));
    auto n = events_to_ssbuf(std::vector<Event>{ev(5, 15, B)}, Time(0));
    auto out = exec::eval_dense(q, {{"m", m.view()}, {"n", n.view()}}, Time(0), Time(15));
    EXPECT_EQ(ssbuf_to_events(out), (std::vector<Event>{ev(5, 10, Value::real(8.0))}));
}

TEST(Dense, WindowSumTenFive) {
    Graph g;
    g.window(g.input("m"), "sum", 10, 5);
    auto q = passes::resolve_boundaries(lower(g));
    auto m = events_to_ssbuf(std::vector<Event>{ev(0, 5, Value::real(1)), ev(5, 10, Value::real(2))}, Time(-10));
    auto out = exec::eval_dense(q, {{"m", m.view()}}, Time(0), Time(30));
    auto at = [&](Ticks t) { return out.view().value_at(Time(t)); };
    EXPECT_EQ(at(5), real(1));
    EXPECT_EQ(at(10), real(3));
    EXPECT_EQ(at(15), real(2));
    EXPECT_TRUE(at(20).is_phi());
    EXPECT_TRUE(at(25).is_phi());
}

TEST(Dense, MissingCoverageIsAnError) {
    auto m = events_to_ssbuf(std::vector<Event>{ev(0, 10, A)}, Time(0));
    auto q = single_def("m", ir::reduce("sum", ir::slice("m", -5, 0)));
    EXPECT_THROW(exec::eval_dense(q, {{"m", m.view()}}, Time(2), Time(10)), CoverageError);
}

// Kernel

TEST(Kernel, PointwiseIteratesOncePerSnapshot) {
    std::vector<Event> events;
    for (int i = 0; i < 50; ++i) events.push_back(ev(i * 200, (i + 1) * 200, Value::real(i % 2 ? 1.0 : 2.0)));
    auto buf = events_to_ssbuf(events, Time(0));
    auto q = single_def("m", ir::at("m") * ir::lit(2.0));
    auto plan = exec::synthesize_kernel(q);
    exec::KernelStats stats;
    auto out = plan.run({{"m", buf.view()}}, Time(0), Time(10000), &stats);
    EXPECT_EQ(stats.total(), 50u);
    EXPECT_EQ(out, exec::eval_dense(q, {{"m", buf.view()}}, Time(0), Time(10000)));
}

TEST(Kernel, ConstantInputGivesOneSnapshot) {
    auto buf = events_to_ssbuf(std::vector<Event>{ev(-100, 1000, A)}, Time(-100));
    Graph g;
    auto m = g.input("m");
    g.join(g.window(m, "avg", 20, 1), m, left() - right());
    auto q = passes::fuse(passes::resolve_boundaries(lower(g)));
    auto out = exec::synthesize_kernel(q).run({{"m", buf.view()}}, Time(0), Time(1000));
    EXPECT_EQ(out.size(), 1u);
    EXPECT_EQ(out, exec::eval_dense(q, {{"m", buf.view()}}, Time(0), Time(1000)));
}

TEST(Kernel, NextChangeExamples) {
    // m has boundaries at 5 and 10.
    auto m = snaps({{5, real(1)}, {10, real(2)}}, Time(-20));
    auto idx = exec::synthesize_kernel(single_def("m", ir::at("m")));
    Time got = idx.next_change("out", {{"m", m.view()}}, Time(2), Time(100));
    // Oracle: the first tick after 2 whose value differs from the value at 2.
    Ticks first_diff = 3;
    while (m.view().value_at(Time(first_diff)) == m.view().value_at(Time(2))) ++first_diff;
    EXPECT_EQ(got, Time(first_diff));
    EXPECT_EQ(got, Time(6));

    auto w = snaps({{2, real(1)}, {12, real(2)}, {40, real(3)}}, Time(-20));
    auto win = exec::synthesize_kernel(single_def("m", ir::reduce("sum", ir::slice("m", -10, 0))));
    auto content = [&](Ticks t) { return reduce_window(*ReductionRegistry::global().find("sum"), w.view(), Time(t - 10), Time(t)); };
    Ticks scan = 4;
    while (content(scan) == content(3)) ++scan;
    EXPECT_EQ(win.next_change("out", {{"m", w.view()}}, Time(3), Time(100)), Time(12));
    EXPECT_EQ(scan, 12);

    auto coarse = exec::synthesize_kernel(single_def("m", ir::reduce("sum", ir::slice("m", -10, 0)), 5));
    EXPECT_EQ(coarse.next_change("out", {{"m", w.view()}}, Time(5), Time(100)), Time(15));
    EXPECT_EQ(coarse.next_change("out", {{"m", w.view()}}, Time(5), Time(13)), Time(13));
}

TEST(Kernel, UnsupportedIrIsASynthesisError) {
    ir::Query q;
    q.inputs.push_back({"m", ir::Schema::scalar(ValueKind::Float)});
    q.defs.push_back({"out", ir::TimeDomain::unbounded(), ir::slice("m", -3, 0)});
    q.output = "out";
    EXPECT_THROW(exec::synthesize_kernel(q), exec::SynthesisError);
    q.defs[0].body = ir::reduce("no_such", ir::slice("m", -3, 0));
    EXPECT_THROW(exec::synthesize_kernel(q), exec::SynthesisError);
}

TEST(Kernel, SharedSubexpressionsEvaluateOnce) {
    auto q = passes::fuse(passes::resolve_boundaries(lower(build_trend_query())));
    auto shared = exec::synthesize_kernel(q);
    auto plain = exec::synthesize_kernel(q, {.share_subexpressions = false});
    ASSERT_EQ(shared.loop_count(), 1u);
    EXPECT_LT(shared.slot_counts()[0], plain.slot_counts()[0]);
    std::mt19937_64 rng(5);
    auto buf = fixtures::random_stream(rng);
    EXPECT_EQ(shared.run({{"stock", buf.view()}}, Time(0), Time(300)),
              plain.run({{"stock", buf.view()}}, Time(0), Time(300)));
}

TEST(Kernel, TrendFusedMatchesOracleOnTenThousandEvents) {
    std::mt19937_64 rng(2026);
    fixtures::StreamShape shape;
    shape.end = 60000;
    auto events = fixtures::random_events(rng, shape);
    ASSERT_GE(events.size(), 10000u);
    events.resize(10000);
    auto buf = events_to_ssbuf(events, Time(-64));
    const Time te = events.back().end;
    for (bool fuse : {true, false}) {
        auto c = passes::compile(build_trend_query(), {.fuse = fuse});
        auto plan = exec::synthesize_kernel(c.final);
        EXPECT_EQ(plan.run({{"stock", buf.view()}}, Time(0), te), exec::eval_dense(c.final, {{"stock", buf.view()}}, Time(0), te));
    }
}

// Kernel and oracle agree snapshot for snapshot on random queries and streams, with and
// without fusion and subtract-on-evict.
TEST(Kernel, MatchesOracleOnRandomQueries) {
    for (std::uint64_t seed = 0; seed < 600; ++seed) {
        std::mt19937_64 rng(seed * 7919 + 1);
        auto rg = fixtures::random_graph(rng);
        auto c = passes::compile(rg.graph);
        std::vector<SnapshotBuffer> bufs;
        bufs.reserve(rg.inputs.size());
        exec::Inputs in;
        fixtures::StreamShape shape;
        shape.end = 600;
        for (const auto& name : rg.inputs) {
            bufs.push_back(fixtures::random_stream(rng, shape));
            in[name] = bufs.back().view();
        }
        const Time ts(64), te(500);
        const auto want = exec::eval_dense(c.resolved, in, ts, te);
        for (const auto* q : {&c.resolved, &c.fused}) {
            for (bool soe : {true, false}) {
                exec::KernelStats stats;
                auto got = exec::synthesize_kernel(*q, {.subtract_on_evict = soe}).run(in, ts, te, &stats);
                ASSERT_EQ(got, want) << "seed " << seed << " soe " << soe << "\n" << ir::print(*q);
            }
        }
    }
}

TEST(Kernel, WindowIterationsAreBounded) {
    std::mt19937_64 rng(3);
    fixtures::StreamShape shape;
    shape.end = 5000;
    auto buf = fixtures::random_stream(rng, shape);
    for (Ticks stride : {1, 5, 25}) {
        Graph g;
        g.window(g.input("m"), "sum", 50, stride);
        auto q = passes::resolve_boundaries(lower(g));
        exec::KernelStats stats;
        exec::synthesize_kernel(q).run({{"m", buf.view()}}, Time(100), Time(5000), &stats);
        const std::uint64_t windows = static_cast<std::uint64_t>((5000 - 100) / stride);
        EXPECT_LE(stats.total(), 2 * buf.size() + windows) << stride;
    }
}
