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

// Event-centric operator graph and its lowering to temporal definitions.
//
// Scalar functions attached to operators are IR expressions over placeholders: `in()` is
// the upstream payload (Select, Where, window selectors), `left()` and `right()` are the
// two Join payloads. They may also use the domain variable t().

#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilt/exec/reduction.hpp"
#include "tilt/ir/query.hpp"
#include "tilt/ir/substitute.hpp"

namespace tilt::frontend {

using ir::Expr;

class LoweringError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kInSlot = "$in";
inline constexpr const char* kLeftSlot = "$left";
inline constexpr const char* kRightSlot = "$right";

inline Expr in() { return ir::at(kInSlot); }
inline Expr left() { return ir::at(kLeftSlot); }
inline Expr right() { return ir::at(kRightSlot); }

enum class OpKind : std::uint8_t { Input, Select, Where, Join, WindowAgg, Shift, Chop };

inline const char* kind_name(OpKind k) {
    switch (k) {
    case OpKind::Input: return "Input";
    case OpKind::Select: return "Select";
    case OpKind::Where: return "Where";
    case OpKind::Join: return "Join";
    case OpKind::WindowAgg: return "WindowAgg";
    case OpKind::Shift: return "Shift";
    case OpKind::Chop: return "Chop";
    }
    return "?";
}

/// Inner joins are defined where both sides are; left joins wherever the left side is,
/// with the combiner seeing phi for a missing right side.
enum class JoinKind : std::uint8_t { Inner, Left };

struct OpNode {
    OpKind kind = OpKind::Input;
    std::string name;
    /// Inventory label; empty for helper nodes that are not counted.
    std::string tag;
    std::vector<std::size_t> upstream;
    Expr fn;
    JoinKind join = JoinKind::Inner;
    std::string reduction;
    Ticks size = 0, stride = 0;
    /// Shift delta or Chop period.
    Ticks ticks = 0;
    ir::Schema schema;
};

/// Default inventory label for a window aggregation.
inline std::string window_tag(const std::string& reduction) {
    static const std::map<std::string, std::string> tags = {
        {"sum", "Sum"}, {"avg", "Avg"}, {"stddev", "StdDev"}, {"max", "Max"},
        {"min", "Min"}, {"count", "Count"}, {"product", "Product"}};
    auto it = tags.find(reduction);
    return it == tags.end() ? "Custom-Agg" : it->second;
}

class Graph {
  public:
    using Id = std::size_t;

    Id input(std::string name, ir::Schema schema = ir::Schema::scalar(ValueKind::Float)) {
        OpNode n;
        n.kind = OpKind::Input;
        n.name = std::move(name);
        n.schema = std::move(schema);
        return push(std::move(n));
    }

    /// Pointwise payload transform.
    Id select(Id up, Expr fn, std::string name = {}, std::string tag = "Select") {
        return push(unary_node(OpKind::Select, up, std::move(fn), std::move(name), std::move(tag)));
    }

    /// Keeps payloads satisfying `pred`.
    Id where(Id up, Expr pred, std::string name = {}, std::string tag = "Where") {
        return push(unary_node(OpKind::Where, up, std::move(pred), std::move(name), std::move(tag)));
    }

    Id join(Id l, Id r, Expr combiner, JoinKind kind = JoinKind::Inner, std::string name = {},
            std::string tag = "Join") {
        OpNode n;
        n.kind = OpKind::Join;
        n.upstream = {l, r};
        n.fn = std::move(combiner);
        n.join = kind;
        n.name = std::move(name);
        n.tag = std::move(tag);
        return push(std::move(n));
    }

    /// Aggregates (t - size, t] every `stride` ticks; `selector` maps each payload first.
    Id window(Id up, std::string reduction, Ticks size, Ticks stride, Expr selector = nullptr,
              std::string name = {}, std::optional<std::string> tag = std::nullopt) {
        OpNode n;
        n.kind = OpKind::WindowAgg;
        n.upstream = {up};
        n.tag = tag ? *tag : window_tag(reduction);
        n.reduction = std::move(reduction);
        n.size = size;
        n.stride = stride;
        n.fn = std::move(selector);
        n.name = std::move(name);
        return push(std::move(n));
    }

    /// Value now equals the upstream value `delta` ticks ago.
    Id shift(Id up, Ticks delta, std::string name = {}, std::string tag = "Shift") {
        OpNode n;
        n.kind = OpKind::Shift;
        n.upstream = {up};
        n.ticks = delta;
        n.name = std::move(name);
        n.tag = std::move(tag);
        return push(std::move(n));
    }

    /// Same values, sampled on multiples of `period`.
    Id chop(Id up, Ticks period, std::string name = {}, std::string tag = "Chop") {
        OpNode n;
        n.kind = OpKind::Chop;
        n.upstream = {up};
        n.ticks = period;
        n.name = std::move(name);
        n.tag = std::move(tag);
        return push(std::move(n));
    }

    void set_output(Id id) { output_ = id; }
    [[nodiscard]] Id output() const { return output_.value_or(nodes_.empty() ? 0 : nodes_.size() - 1); }

    [[nodiscard]] const std::vector<OpNode>& nodes() const { return nodes_; }
    [[nodiscard]] const OpNode& node(Id id) const { return nodes_.at(id); }

    /// Operator nodes, excluding inputs.
    [[nodiscard]] std::size_t op_count() const {
        std::size_t n = 0;
        for (const auto& x : nodes_) n += x.kind == OpKind::Input ? 0 : 1;
        return n;
    }

    /// Tag -> number of nodes carrying it.
    [[nodiscard]] std::map<std::string, int> inventory() const {
        std::map<std::string, int> inv;
        for (const auto& x : nodes_) {
            if (x.kind != OpKind::Input && !x.tag.empty()) ++inv[x.tag];
        }
        return inv;
    }

  private:
    static OpNode unary_node(OpKind k, Id up, Expr fn, std::string name, std::string tag) {
        OpNode n;
        n.kind = k;
        n.upstream = {up};
        n.fn = std::move(fn);
        n.name = std::move(name);
        n.tag = std::move(tag);
        return n;
    }

    Id push(OpNode n) {
        for (Id u : n.upstream) {
            if (u >= nodes_.size()) throw LoweringError("node refers to unknown upstream #" + std::to_string(u));
        }
        if (n.name.empty()) {
            std::string base = kind_name(n.kind);
            for (auto& c : base) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            n.name = base + std::to_string(nodes_.size());
        }
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    std::vector<OpNode> nodes_;
    std::optional<Id> output_;
};

namespace detail {

inline void check_node(const OpNode& n) {
    auto fail = [&](const std::string& why) {
        throw LoweringError(std::string(kind_name(n.kind)) + " node '" + n.name + "': " + why);
    };
    const std::size_t want = n.kind == OpKind::Input ? 0 : n.kind == OpKind::Join ? 2 : 1;
    if (n.upstream.size() != want) fail("expects " + std::to_string(want) + " upstream node(s)");
    switch (n.kind) {
    case OpKind::Select:
    case OpKind::Where:
    case OpKind::Join:
        if (!n.fn) fail("missing scalar function");
        break;
    case OpKind::WindowAgg:
        if (n.stride < 1 || n.size < n.stride) fail("window needs size >= stride >= 1");
        if (!ReductionRegistry::global().find(n.reduction)) fail("unknown reduction '" + n.reduction + "'");
        break;
    case OpKind::Shift:
        if (n.ticks < 0) fail("shift delta must be non-negative");
        break;
    case OpKind::Chop:
        if (n.ticks < 1) fail("chop period must be at least 1");
        break;
    case OpKind::Input: break;
    }
}

} // namespace detail

/// One temporal definition per operator node, over an unbounded domain.
inline ir::Query lower(const Graph& g) {
    using namespace ir;
    Query q;
    const auto& nodes = g.nodes();
    if (nodes.empty()) throw LoweringError("empty graph");
    for (const auto& n : nodes) {
        detail::check_node(n);
        auto up = [&](std::size_t i) { return nodes[n.upstream[i]].name; };
        switch (n.kind) {
        case OpKind::Input: q.inputs.push_back({n.name, n.schema}); break;
        case OpKind::Select:
            q.defs.push_back({n.name, TimeDomain::unbounded(), substitute(n.fn, kInSlot, at(up(0)))});
            break;
        case OpKind::Where:
            q.defs.push_back(
                {n.name, TimeDomain::unbounded(), if_(substitute(n.fn, kInSlot, at(up(0))), at(up(0)), phi())});
            break;
        case OpKind::Join: {
            Expr comb = substitute(substitute(n.fn, kLeftSlot, at(up(0))), kRightSlot, at(up(1)));
            Expr defined = n.join == JoinKind::Inner ? and_(not_phi(at(up(0))), not_phi(at(up(1)))) : not_phi(at(up(0)));
            q.defs.push_back({n.name, TimeDomain::unbounded(), if_(defined, comb, phi())});
            break;
        }
        case OpKind::WindowAgg: {
            Expr map = n.fn ? substitute(n.fn, kInSlot, elem()) : nullptr;
            q.defs.push_back(
                {n.name, TimeDomain::unbounded(n.stride), reduce(n.reduction, slice(up(0), -n.size, 0), map)});
            break;
        }
        case OpKind::Shift: q.defs.push_back({n.name, TimeDomain::unbounded(), at(up(0), -n.ticks)}); break;
        case OpKind::Chop: q.defs.push_back({n.name, TimeDomain::unbounded(n.ticks), at(up(0))}); break;
        }
    }
    const OpNode& out = g.node(g.output());
    if (out.kind == OpKind::Input) throw LoweringError("output node '" + out.name + "' is an input");
    q.output = out.name;
    auto diags = diagnose(q);
    if (!diags.empty()) throw LoweringError(ValidationError(std::move(diags)).what());
    return q;
}

/// Two moving averages of a price stream (10 and 20 ticks, stride 1), their difference,
/// and a filter keeping positive differences.
inline Graph build_trend_query(const std::string& input = "stock") {
    Graph g;
    auto stock = g.input(input);
    auto sum10 = g.window(stock, "sum", 10, 1, nullptr, "sum10", "Avg");
    auto sum20 = g.window(stock, "sum", 20, 1, nullptr, "sum20", "Avg");
    auto avg10 = g.select(sum10, in() / ir::lit(10.0), "avg10", "");
    auto avg20 = g.select(sum20, in() / ir::lit(20.0), "avg20", "");
    auto diff = g.join(avg10, avg20, left() - right(), JoinKind::Inner, "diff");
    auto out = g.where(diff, in() > ir::lit(0.0), "trend");
    g.set_output(out);
    return g;
}

} // namespace tilt::frontend
