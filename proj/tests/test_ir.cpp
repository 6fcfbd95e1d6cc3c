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

#include <random>

#include "tilt/ir/query.hpp"
#include "tilt/ir/sexpr.hpp"
#include "tilt/ir/substitute.hpp"

using namespace tilt;
using namespace tilt::ir;

namespace {

Query two_input_query() {
    Query q;
    q.inputs = {{"m", Schema::scalar(ValueKind::Float)}, {"n", Schema::scalar(ValueKind::Float)}};
    q.defs = {{"sum10", TimeDomain::unbounded(), reduce("sum", slice("m", -10, 0))},
              {"out", TimeDomain::unbounded(), at("sum10") / lit(10.0) - at("n")}};
    q.output = "out";
    return q;
}

bool has_message(const std::vector<Diagnostic>& ds, const std::string& needle) {
    for (const auto& d : ds) {
        if (d.message.find(needle) != std::string::npos) return true;
    }
    return false;
}

/// Random well-formed expression over inputs m and n.
Expr random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 3 : 9);
    std::uniform_int_distribution<int> off(-20, 5);
    switch (pick(rng)) {
    case 0: return lit(std::uniform_real_distribution<double>(-100, 100)(rng));
    case 1: return lit_int(off(rng));
    case 2: return at("m", off(rng));
    case 3: return t();
    case 4: return binary(kAllBinaryOps[rng() % 7], random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 5: return unary(UnaryOp::Abs, random_expr(rng, depth - 1));
    case 6: return if_(random_expr(rng, depth - 1) > random_expr(rng, depth - 1), random_expr(rng, depth - 1), phi());
    case 7: {
        Ticks lo = -1 - static_cast<Ticks>(rng() % 30);
        return reduce("avg", slice("n", lo, lo + 1 + static_cast<Ticks>(rng() % 10)),
                      rng() % 2 ? binary(BinaryOp::Mul, elem(), lit(2.0)) : nullptr);
    }
    case 8: return call("pow", {random_expr(rng, depth - 1), lit_int(2)});
    default: return field(constant(Value::structure({{"a", Value::integer(1)}, {"b", Value::boolean(true)}})), "a");
    }
}

} // namespace

TEST(Validate, TwoInputQueryIsValid) { EXPECT_TRUE(diagnose(two_input_query()).empty()); }

TEST(Validate, UnboundReference) {
    Query q = two_input_query();
    q.defs[1].body = at("x") + lit(1.0);
    auto ds = diagnose(q);
    ASSERT_FALSE(ds.empty());
    EXPECT_TRUE(has_message(ds, "unbound temporal ~x"));
    EXPECT_EQ(ds.front().def, "out");
    EXPECT_THROW(validate(q), ValidationError);
}

TEST(Validate, ReferenceCycle) {
    Query q;
    q.inputs = {{"m", Schema::scalar(ValueKind::Float)}};
    q.defs = {{"a", TimeDomain::unbounded(), at("b") + at("m")}, {"b", TimeDomain::unbounded(), at("a", -1)}};
    q.output = "b";
    auto ds = diagnose(q);
    EXPECT_TRUE(has_message(ds, "cyclic definition"));
    EXPECT_THROW(topo_order(q), std::invalid_argument);
}

TEST(Validate, StructuralErrorsCarryPaths) {
    Query q = two_input_query();
    q.defs[1].body = at("m") + if_(lit(1.0), at("n"), phi());
    auto ds = diagnose(q);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].path, "1");
    EXPECT_TRUE(has_message(ds, "condition"));

    q.defs[1].body = slice("m", -3, 0);
    EXPECT_TRUE(has_message(diagnose(q), "slice outside a reduce"));
    q.defs[1].body = index("m", binary(BinaryOp::Mul, t(), lit_int(2)));
    EXPECT_TRUE(has_message(diagnose(q), "non-constant offset"));
    q.defs[1].body = reduce("nosuch", slice("m", -3, 0));
    EXPECT_TRUE(has_message(diagnose(q), "unknown reduction"));
    q.defs[1].body = reduce("sum", slice("m", -3, 0), at("n"));
    EXPECT_TRUE(has_message(diagnose(q), "inside a reduce map"));
    q.defs[1].body = elem();
    EXPECT_TRUE(has_message(diagnose(q), "outside a reduce map"));
    q.defs[1].body = call("pow", {at("m")});
    EXPECT_TRUE(has_message(diagnose(q), "takes 2 arguments"));
    q.defs[1].domain.precision = 0;
    q.defs[1].body = at("m");
    EXPECT_TRUE(has_message(diagnose(q), "precision"));
}

TEST(Validate, TypeErrors) {
    Query q;
    q.inputs = {{"e", Schema::record({{"id", ValueKind::Int}, {"kind", ValueKind::Int}})},
                {"b", Schema::scalar(ValueKind::Bool)}};
    q.defs = {{"o", TimeDomain::unbounded(), field(at("e"), "id") + lit_int(1)}};
    q.output = "o";
    EXPECT_TRUE(diagnose(q).empty());
    q.defs[0].body = field(at("e"), "missing");
    EXPECT_TRUE(has_message(diagnose(q), "no field 'missing'"));
    q.defs[0].body = at("b") + lit(1.0);
    EXPECT_TRUE(has_message(diagnose(q), "type error"));
    q.defs[0].body = reduce("sum", slice("e", -5, 0));
    EXPECT_TRUE(has_message(diagnose(q), "needs numbers"));
    q.defs[0].body = reduce("count", slice("e", -5, 0));
    EXPECT_TRUE(diagnose(q).empty());
}

TEST(Validate, StableUnderTopologicalReordering) {
    Query q;
    q.inputs = {{"m", Schema::scalar(ValueKind::Float)}};
    q.defs = {{"a", TimeDomain::unbounded(), at("m") + lit(1.0)},
              {"b", TimeDomain::unbounded(), at("m") * lit(2.0)},
              {"c", TimeDomain::unbounded(), at("a") - at("b")}};
    q.output = "c";
    EXPECT_TRUE(diagnose(q).empty());
    std::swap(q.defs[0], q.defs[1]);
    EXPECT_TRUE(diagnose(q).empty());
    // Declaration order is free; a consumer listed first still validates.
    std::rotate(q.defs.begin(), q.defs.begin() + 2, q.defs.end());
    EXPECT_TRUE(diagnose(q).empty());
    auto order = topo_order(q);
    EXPECT_EQ(q.defs[order.back()].name, "c");
}

TEST(Substitute, InlinesProducerIntoJoin) {
    Expr repl = reduce("sum", slice("stock", -10, 0)) / lit(10.0);
    Expr host = at("avg10") - at("avg20");
    Expr want = reduce("sum", slice("stock", -10, 0)) / lit(10.0) - at("avg20");
    EXPECT_TRUE(equal(substitute(host, "avg10", repl), want));
}

TEST(Substitute, AbsentNameIsIdentity) {
    Expr host = at("a") + lit(1.0);
    Expr out = substitute(host, "zz", lit(3.0));
    EXPECT_EQ(out, host);
}

TEST(Substitute, ReplacesEveryOccurrenceInNestedIf) {
    Expr host = if_(at("p") > lit(0.0), if_(not_phi(at("q")), at("p") * at("q"), phi()), phi());
    ASSERT_EQ(reference_count(host, "p"), 2u);
    std::size_t q_before = reference_count(host, "q");
    Expr out = substitute(host, "p", at("m") + lit(1.0));
    EXPECT_EQ(reference_count(out, "p"), 0u);
    EXPECT_EQ(reference_count(out, "m"), 2u);
    EXPECT_EQ(reference_count(out, "q"), q_before);
}

TEST(Substitute, RebindsTimeForShiftedReads) {
    Expr host = at("p", -3);
    Expr repl = at("m", -2) + reduce("sum", slice("m", -5, 0)) + t();
    Expr want = at("m", -5) + reduce("sum", slice("m", -8, -3)) + time_at(-3);
    EXPECT_TRUE(equal(substitute(host, "p", repl), want));
}

TEST(Substitute, SliceOfProducerIsNotFusible) {
    Expr host = reduce("sum", slice("p", -4, 0));
    EXPECT_THROW(substitute(host, "p", at("m")), NotFusible);
}

TEST(Sexpr, PrintsReadableForms) {
    EXPECT_EQ(print(at("m", -3) + lit(1.0)), "(+ (index m (+ t -3)) 1.0)");
    EXPECT_EQ(print(reduce("sum", slice("m", -10, 0))), "(reduce sum (slice m -10 0))");
    EXPECT_EQ(print(field(at("e"), "id")), "(field id (index e t))");
}

TEST(Sexpr, ExpressionRoundTripProperty) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        Expr e = random_expr(rng, 5);
        std::string text = print(e);
        Expr back = parse_expr(text);
        ASSERT_TRUE(equal(e, back)) << text;
        ASSERT_EQ(print(back), text);
    }
}

TEST(Sexpr, QueryRoundTrip) {
    Query q = two_input_query();
    q.inputs.push_back({"ev", Schema::record({{"user_id", ValueKind::Int}, {"flag", ValueKind::Bool}})});
    q.defs[0].domain = TimeDomain::symbolic(-10, 0, 5);
    q.defs[1].domain = {Bound::fixed(0), Bound::fixed(100), 1};
    q.lookback["m"] = 10;
    q.lookahead["m"] = 0;
    Query back = parse_query(print(q));
    EXPECT_TRUE(equal(q, back)) << print(back);
}

TEST(Sexpr, MalformedInputIsRejected) {
    EXPECT_THROW(parse_expr("(+ 1"), ParseError);
    EXPECT_THROW(parse_expr("(+ 1 2 3)"), ParseError);
    EXPECT_THROW(parse_expr("(frob 1)"), ParseError);
    EXPECT_THROW(parse_expr("1 2"), ParseError);
    EXPECT_THROW(parse_query("(query (bogus x))"), ParseError);
}
