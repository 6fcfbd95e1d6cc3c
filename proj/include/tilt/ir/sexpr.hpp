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

// S-expression text form of expressions and queries. print then parse is the identity on
// trees (floats use shortest round-trip spelling).

#pragma once

#include <cctype>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tilt/ir/query.hpp"

namespace tilt::ir {

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void print_value(std::string& out, const Value& v) {
    if (v.kind() != ValueKind::Struct) {
        out += to_string(v);
        return;
    }
    out += "(struct";
    for (const auto& [k, f] : v.fields()) {
        out += " (" + k + " ";
        print_value(out, f);
        out += ")";
    }
    out += ")";
}

inline void print_expr(std::string& out, const Expr& e) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstNode>) {
                print_value(out, n.value);
            } else if constexpr (std::is_same_v<T, TimeVarNode>) {
                out += "t";
            } else if constexpr (std::is_same_v<T, ElemNode>) {
                out += "elem";
            } else if constexpr (std::is_same_v<T, BinaryNode>) {
                out += std::string("(") + op_name(n.op) + " ";
                print_expr(out, n.lhs);
                out += " ";
                print_expr(out, n.rhs);
                out += ")";
            } else if constexpr (std::is_same_v<T, UnaryNode>) {
                out += std::string("(") + op_name(n.op) + " ";
                if (n.op == UnaryOp::Field) out += n.field + " ";
                print_expr(out, n.arg);
                out += ")";
            } else if constexpr (std::is_same_v<T, IfNode>) {
                out += "(if ";
                print_expr(out, n.cond);
                out += " ";
                print_expr(out, n.then_branch);
                out += " ";
                print_expr(out, n.else_branch);
                out += ")";
            } else if constexpr (std::is_same_v<T, IndexNode>) {
                out += "(index " + n.source + " ";
                print_expr(out, n.time);
                out += ")";
            } else if constexpr (std::is_same_v<T, SliceNode>) {
                out += "(slice " + n.source + " " + std::to_string(n.lo) + " " + std::to_string(n.hi) + ")";
            } else if constexpr (std::is_same_v<T, ReduceNode>) {
                out += "(reduce " + n.reduction + " ";
                print_expr(out, n.window);
                if (n.map) {
                    out += " ";
                    print_expr(out, n.map);
                }
                out += ")";
            } else if constexpr (std::is_same_v<T, CallNode>) {
                out += "(call " + n.fn;
                for (const auto& a : n.args) {
                    out += " ";
                    print_expr(out, a);
                }
                out += ")";
            }
        },
        e->v);
}

inline std::string print_bound(const Bound& b) {
    switch (b.kind) {
    case Bound::Kind::Fixed: return "(at " + std::to_string(b.offset) + ")";
    case Bound::Kind::Start: return "(ts " + std::to_string(b.offset) + ")";
    case Bound::Kind::End: return "(te " + std::to_string(b.offset) + ")";
    default: return "inf";
    }
}

inline const char* kind_keyword(ValueKind k) {
    switch (k) {
    case ValueKind::Bool: return "bool";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Struct: return "struct";
    default: return "phi";
    }
}

/// Parsed S-expression node: an atom or a list.
struct Sx {
    bool is_atom = false;
    std::string atom;
    std::vector<Sx> items;
};

class Reader {
  public:
    explicit Reader(std::string_view text) : s_(text) {}

    Sx read() {
        skip();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input");
        if (s_[pos_] == ')') throw ParseError("unexpected ')' at " + std::to_string(pos_));
        if (s_[pos_] == '(') {
            ++pos_;
            Sx list;
            for (;;) {
                skip();
                if (pos_ >= s_.size()) throw ParseError("unclosed '('");
                if (s_[pos_] == ')') {
                    ++pos_;
                    return list;
                }
                list.items.push_back(read());
            }
        }
        std::size_t b = pos_;
        while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
               s_[pos_] != ')') {
            ++pos_;
        }
        return {true, std::string(s_.substr(b, pos_ - b)), {}};
    }

    void expect_end() {
        skip();
        if (pos_ != s_.size()) throw ParseError("trailing input at " + std::to_string(pos_));
    }

  private:
    void skip() {
        while (pos_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
            } else if (s_[pos_] == ';') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

inline const std::string& atom(const Sx& x, const char* what) {
    if (!x.is_atom) throw ParseError(std::string("expected ") + what);
    return x.atom;
}

inline const std::vector<Sx>& list(const Sx& x, std::size_t min_len, const char* what) {
    if (x.is_atom || x.items.size() < min_len) throw ParseError(std::string("malformed ") + what);
    return x.items;
}

inline Ticks parse_ticks(const std::string& s) {
    Ticks v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("expected an integer, got '" + s + "'");
    return v;
}

inline std::optional<Value> parse_literal(const std::string& s) {
    if (s == "phi") return Value::phi();
    if (s == "true") return Value::boolean(true);
    if (s == "false") return Value::boolean(false);
    if (s == "nan") return Value::real(std::numeric_limits<double>::quiet_NaN());
    if (s == "inf") return Value::real(std::numeric_limits<double>::infinity());
    if (s == "-inf") return Value::real(-std::numeric_limits<double>::infinity());
    if (s.empty() || !(std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-')) return std::nullopt;
    if (s.find_first_of(".e") == std::string::npos) {
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
        if (ec == std::errc() && p == s.data() + s.size()) return Value::integer(i);
        return std::nullopt;
    }
    double d = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec == std::errc() && p == s.data() + s.size()) return Value::real(d);
    return std::nullopt;
}

inline Value parse_value(const Sx& x) {
    if (x.is_atom) {
        auto lit = parse_literal(x.atom);
        if (!lit) throw ParseError("bad literal '" + x.atom + "'");
        return *lit;
    }
    const auto& items = list(x, 1, "struct literal");
    if (atom(items[0], "'struct'") != "struct") throw ParseError("expected struct literal");
    std::vector<Value::Field> fields;
    for (std::size_t i = 1; i < items.size(); ++i) {
        const auto& f = list(items[i], 2, "struct field");
        fields.push_back({atom(f[0], "field name"), parse_value(f[1])});
    }
    return Value::structure(std::move(fields));
}

inline std::optional<BinaryOp> binary_named(const std::string& s) {
    for (BinaryOp op : kAllBinaryOps) {
        if (s == op_name(op)) return op;
    }
    return std::nullopt;
}

inline std::optional<UnaryOp> unary_named(const std::string& s) {
    for (UnaryOp op : kAllUnaryOps) {
        if (s == op_name(op)) return op;
    }
    return std::nullopt;
}

inline Expr parse_expr(const Sx& x) {
    if (x.is_atom) {
        if (x.atom == "t") return t();
        if (x.atom == "elem") return elem();
        auto lit = parse_literal(x.atom);
        if (!lit) throw ParseError("unknown atom '" + x.atom + "'");
        return constant(*lit);
    }
    const auto& it = list(x, 1, "expression");
    const std::string& head = atom(it[0], "operator");
    auto arity = [&](std::size_t n) {
        if (it.size() != n + 1) throw ParseError("'" + head + "' takes " + std::to_string(n) + " operands");
    };
    if (head == "struct") return constant(parse_value(x));
    if (head == "if") {
        arity(3);
        return if_(parse_expr(it[1]), parse_expr(it[2]), parse_expr(it[3]));
    }
    if (head == "index") {
        arity(2);
        return index(atom(it[1], "temporal name"), parse_expr(it[2]));
    }
    if (head == "slice") {
        arity(3);
        return slice(atom(it[1], "temporal name"), parse_ticks(atom(it[2], "offset")), parse_ticks(atom(it[3], "offset")));
    }
    if (head == "reduce") {
        if (it.size() != 3 && it.size() != 4) throw ParseError("'reduce' takes 2 or 3 operands");
        return reduce(atom(it[1], "reduction name"), parse_expr(it[2]), it.size() == 4 ? parse_expr(it[3]) : nullptr);
    }
    if (head == "call") {
        if (it.size() < 2) throw ParseError("'call' needs a function name");
        std::vector<Expr> args;
        for (std::size_t i = 2; i < it.size(); ++i) args.push_back(parse_expr(it[i]));
        return call(atom(it[1], "function name"), std::move(args));
    }
    if (head == "field") {
        arity(2);
        return field(parse_expr(it[2]), atom(it[1], "field name"));
    }
    if (auto op = binary_named(head)) {
        arity(2);
        return binary(*op, parse_expr(it[1]), parse_expr(it[2]));
    }
    if (auto op = unary_named(head)) {
        arity(1);
        return unary(*op, parse_expr(it[1]));
    }
    throw ParseError("unknown operator '" + head + "'");
}

inline Bound parse_bound(const Sx& x) {
    if (x.is_atom) {
        if (x.atom != "inf") throw ParseError("bad bound '" + x.atom + "'");
        return Bound::unbounded();
    }
    const auto& it = list(x, 2, "bound");
    const std::string& k = atom(it[0], "bound kind");
    Ticks off = parse_ticks(atom(it[1], "bound offset"));
    if (k == "at") return Bound::fixed(off);
    if (k == "ts") return Bound::start(off);
    if (k == "te") return Bound::end(off);
    throw ParseError("bad bound kind '" + k + "'");
}

inline ValueKind parse_kind(const std::string& s) {
    for (ValueKind k : {ValueKind::Bool, ValueKind::Int, ValueKind::Float, ValueKind::Struct}) {
        if (s == kind_keyword(k)) return k;
    }
    throw ParseError("bad value kind '" + s + "'");
}

inline Schema parse_schema(const Sx& x) {
    if (x.is_atom) return Schema::scalar(parse_kind(x.atom));
    const auto& it = list(x, 1, "schema");
    if (atom(it[0], "'struct'") != "struct") throw ParseError("expected struct schema");
    std::vector<std::pair<std::string, ValueKind>> fields;
    for (std::size_t i = 1; i < it.size(); ++i) {
        const auto& f = list(it[i], 2, "schema field");
        fields.push_back({atom(f[0], "field name"), parse_kind(atom(f[1], "field kind"))});
    }
    return Schema::record(std::move(fields));
}

} // namespace detail

inline std::string print(const Expr& e) {
    std::string out;
    detail::print_expr(out, e);
    return out;
}

inline std::string print(const Query& q) {
    std::string out = "(query\n";
    for (const auto& in : q.inputs) {
        out += "  (input " + in.name + " ";
        if (in.schema.kind == ValueKind::Struct) {
            out += "(struct";
            for (const auto& [n, k] : in.schema.fields) out += std::string(" (") + n + " " + detail::kind_keyword(k) + ")";
            out += ")";
        } else {
            out += detail::kind_keyword(in.schema.kind);
        }
        out += ")\n";
    }
    for (const auto& d : q.defs) {
        out += "  (def " + d.name + " (domain " + detail::print_bound(d.domain.start) + " " +
               detail::print_bound(d.domain.end) + " " + std::to_string(d.domain.precision) + ")\n    " + print(d.body) +
               ")\n";
    }
    out += "  (output " + q.output + ")";
    for (const auto& [k, v] : q.lookback) out += "\n  (lookback " + k + " " + std::to_string(v) + ")";
    for (const auto& [k, v] : q.lookahead) out += "\n  (lookahead " + k + " " + std::to_string(v) + ")";
    return out + ")\n";
}

inline Expr parse_expr(std::string_view text) {
    detail::Reader r(text);
    auto sx = r.read();
    r.expect_end();
    return detail::parse_expr(sx);
}

inline Query parse_query(std::string_view text) {
    using namespace detail;
    Reader r(text);
    Sx top = r.read();
    r.expect_end();
    const auto& it = list(top, 1, "query");
    if (atom(it[0], "'query'") != "query") throw ParseError("expected (query ...)");
    Query q;
    for (std::size_t i = 1; i < it.size(); ++i) {
        const auto& f = list(it[i], 2, "query clause");
        const std::string& k = atom(f[0], "clause keyword");
        if (k == "input" && f.size() == 3) {
            q.inputs.push_back({atom(f[1], "input name"), parse_schema(f[2])});
        } else if (k == "def" && f.size() == 4) {
            const auto& dom = list(f[2], 4, "domain");
            if (atom(dom[0], "'domain'") != "domain") throw ParseError("expected (domain ...)");
            TemporalDef d{atom(f[1], "def name"),
                          {parse_bound(dom[1]), parse_bound(dom[2]), parse_ticks(atom(dom[3], "precision"))},
                          detail::parse_expr(f[3])};
            q.defs.push_back(std::move(d));
        } else if (k == "output" && f.size() == 2) {
            q.output = atom(f[1], "output name");
        } else if ((k == "lookback" || k == "lookahead") && f.size() == 3) {
            (k == "lookback" ? q.lookback : q.lookahead)[atom(f[1], "input name")] = parse_ticks(atom(f[2], "ticks"));
        } else {
            throw ParseError("unknown query clause '" + k + "'");
        }
    }
    return q;
}

} // namespace tilt::ir
