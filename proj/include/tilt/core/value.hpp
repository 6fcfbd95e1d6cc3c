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
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tilt {

class EvalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class ValueKind : std::uint8_t { Phi, Bool, Int, Float, Struct };

inline const char* kind_name(ValueKind k) {
    switch (k) {
    case ValueKind::Phi: return "phi";
    case ValueKind::Bool: return "bool";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Struct: return "struct";
    }
    return "?";
}

class Value;
class ValueSet;

namespace detail {
struct HeapRep {
    mutable std::atomic<int> refs{1};
};
struct StructRep;
struct MultiRep;

/// Out of line so the accessors that call it stay small enough to inline.
[[noreturn, gnu::noinline, gnu::cold]] inline void kind_error(const char* what, ValueKind have) {
    throw EvalError(std::string(what) + kind_name(have));
}
} // namespace detail

/// Payload scalar or struct, or the temporal null phi. 16 bytes; struct payloads are
/// shared immutable heap nodes.
class Value {
  public:
    using Field = std::pair<std::string, Value>;

    constexpr Value() = default;
    Value(const Value& o) : tag_(o.tag_), bits_(o.bits_) { retain(); }
    Value(Value&& o) noexcept : tag_(o.tag_), bits_(o.bits_) { o.tag_ = Tag::Phi; }
    Value& operator=(const Value& o) {
        if (this != &o) {
            o.retain();
            release();
            tag_ = o.tag_;
            bits_ = o.bits_;
        }
        return *this;
    }
    Value& operator=(Value&& o) noexcept {
        if (this != &o) {
            release();
            tag_ = o.tag_;
            bits_ = o.bits_;
            o.tag_ = Tag::Phi;
        }
        return *this;
    }
    ~Value() { release(); }

    static Value phi() { return {}; }
    static Value boolean(bool b) { return Value(Tag::Bool, b ? 1u : 0u); }
    static Value integer(std::int64_t i) { return Value(Tag::Int, std::bit_cast<std::uint64_t>(i)); }
    static Value real(double d) { return Value(Tag::Float, std::bit_cast<std::uint64_t>(d)); }
    /// Field names must be unique.
    static Value structure(std::vector<Field> fields);

    [[nodiscard]] ValueKind kind() const {
        switch (tag_) {
        case Tag::Bool: return ValueKind::Bool;
        case Tag::Int: return ValueKind::Int;
        case Tag::Float: return ValueKind::Float;
        case Tag::Struct: return ValueKind::Struct;
        default: return ValueKind::Phi;
        }
    }
    [[nodiscard]] bool is_phi() const { return tag_ == Tag::Phi; }
    [[nodiscard]] bool is_numeric() const { return tag_ == Tag::Int || tag_ == Tag::Float; }

    [[nodiscard]] bool as_bool() const {
        expect(Tag::Bool);
        return bits_ != 0;
    }
    [[nodiscard]] std::int64_t as_int() const {
        expect(Tag::Int);
        return std::bit_cast<std::int64_t>(bits_);
    }
    [[nodiscard]] double as_float() const {
        expect(Tag::Float);
        return std::bit_cast<double>(bits_);
    }
    /// Int or Float widened to double.
    [[nodiscard]] double as_number() const {
        if (tag_ == Tag::Float) return std::bit_cast<double>(bits_);
        if (tag_ == Tag::Int) return static_cast<double>(std::bit_cast<std::int64_t>(bits_));
        detail::kind_error("expected a number, got ", kind());
    }
    [[nodiscard]] std::span<const Field> fields() const;
    /// Throws EvalError when the field is absent or this is not a struct.
    [[nodiscard]] const Value& field(std::string_view name) const;

    /// Structural equality; floats compare by bit pattern so that equality is an
    /// equivalence relation usable for change detection.
    friend bool operator==(const Value& a, const Value& b);

  private:
    friend class ValueSet;
    enum class Tag : std::uint8_t { Phi, Bool, Int, Float, Struct, Multi };

    Value(Tag t, std::uint64_t bits) : tag_(t), bits_(bits) {}
    static Value adopt(Tag t, const detail::HeapRep* rep) {
        return Value(t, reinterpret_cast<std::uintptr_t>(rep));
    }
    [[nodiscard]] bool on_heap() const { return tag_ == Tag::Struct || tag_ == Tag::Multi; }
    [[nodiscard]] const detail::HeapRep* heap() const {
        return reinterpret_cast<const detail::HeapRep*>(static_cast<std::uintptr_t>(bits_));
    }
    void retain() const {
        if (on_heap()) heap()->refs.fetch_add(1, std::memory_order_relaxed);
    }
    void release();
    void expect(Tag t) const {
        if (tag_ != t) detail::kind_error("value kind mismatch: have ", kind());
    }

    Tag tag_ = Tag::Phi;
    std::uint64_t bits_ = 0;
};

namespace detail {
struct StructRep : HeapRep {
    std::vector<Value::Field> fields;
};
struct MultiRep : HeapRep {
    std::vector<Value> items;
};
} // namespace detail

inline void Value::release() {
    if (!on_heap()) return;
    const detail::HeapRep* rep = heap();
    if (rep->refs.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        if (tag_ == Tag::Struct) {
            delete static_cast<const detail::StructRep*>(rep);
        } else {
            delete static_cast<const detail::MultiRep*>(rep);
        }
    }
    tag_ = Tag::Phi;
}

inline Value Value::structure(std::vector<Field> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        for (std::size_t j = i + 1; j < fields.size(); ++j) {
            if (fields[i].first == fields[j].first) {
                throw EvalError("duplicate struct field '" + fields[i].first + "'");
            }
        }
    }
    auto* rep = new detail::StructRep;
    rep->fields = std::move(fields);
    return adopt(Tag::Struct, rep);
}

inline std::span<const Value::Field> Value::fields() const {
    expect(Tag::Struct);
    return static_cast<const detail::StructRep*>(heap())->fields;
}

inline const Value& Value::field(std::string_view name) const {
    for (const auto& [k, v] : fields()) {
        if (k == name) return v;
    }
    throw EvalError("struct has no field '" + std::string(name) + "'");
}

inline bool operator==(const Value& a, const Value& b) {
    if (a.tag_ != b.tag_) return false;
    switch (a.tag_) {
    case Value::Tag::Phi: return true;
    case Value::Tag::Bool:
    case Value::Tag::Int:
    case Value::Tag::Float: return a.bits_ == b.bits_;
    case Value::Tag::Struct: {
        if (a.bits_ == b.bits_) return true;
        auto fa = a.fields();
        auto fb = b.fields();
        return std::equal(fa.begin(), fa.end(), fb.begin(), fb.end());
    }
    case Value::Tag::Multi: {
        if (a.bits_ == b.bits_) return true;
        const auto& ia = static_cast<const detail::MultiRep*>(a.heap())->items;
        const auto& ib = static_cast<const detail::MultiRep*>(b.heap())->items;
        return ia == ib;
    }
    }
    return false;
}

/// Ordered multiset of payloads held by one snapshot: either the singleton {phi} or one
/// or more non-phi values. A single value is stored inline.
class ValueSet {
  public:
    ValueSet() = default;
    /// Singleton; phi gives {phi}.
    ValueSet(Value v) : rep_(std::move(v)) {} // NOLINT(google-explicit-constructor)
    /// phi entries are dropped; an empty result is {phi}.
    static ValueSet of(std::vector<Value> values) {
        std::erase_if(values, [](const Value& v) { return v.is_phi(); });
        if (values.empty()) return {};
        if (values.size() == 1) return ValueSet(std::move(values.front()));
        auto* rep = new detail::MultiRep;
        rep->items = std::move(values);
        ValueSet out;
        out.rep_ = Value::adopt(Value::Tag::Multi, rep);
        return out;
    }
    static ValueSet of(std::initializer_list<Value> values) { return of(std::vector<Value>(values)); }

    [[nodiscard]] bool is_phi() const { return rep_.is_phi(); }
    [[nodiscard]] bool is_single() const { return rep_.tag_ != Value::Tag::Multi; }
    [[nodiscard]] std::size_t size() const { return values().size(); }
    [[nodiscard]] std::span<const Value> values() const {
        if (rep_.tag_ == Value::Tag::Multi) {
            return static_cast<const detail::MultiRep*>(rep_.heap())->items;
        }
        return {&rep_, 1};
    }
    [[nodiscard]] const Value& operator[](std::size_t i) const { return values()[i]; }
    /// The only value; requires is_single().
    [[nodiscard]] const Value& single() const { return rep_; }

    friend bool operator==(const ValueSet& a, const ValueSet& b) { return a.rep_ == b.rep_; }

  private:
    Value rep_;
};

// ---------------------------------------------------------------------------
// Scalar operators with phi absorption.

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Mod, Min, Max, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnaryOp : std::uint8_t { Neg, Not, Abs, Sqrt, Square, ToFloat, IsPhi, Field };

inline const char* op_name(BinaryOp op) {
    switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "mod";
    case BinaryOp::Min: return "min";
    case BinaryOp::Max: return "max";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
    }
    return "?";
}

inline const char* op_name(UnaryOp op) {
    switch (op) {
    case UnaryOp::Neg: return "neg";
    case UnaryOp::Not: return "not";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Square: return "square";
    case UnaryOp::ToFloat: return "float";
    case UnaryOp::IsPhi: return "is-phi";
    case UnaryOp::Field: return "field";
    }
    return "?";
}

inline constexpr BinaryOp kAllBinaryOps[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div,
                                             BinaryOp::Mod, BinaryOp::Min, BinaryOp::Max, BinaryOp::Eq,
                                             BinaryOp::Ne,  BinaryOp::Lt,  BinaryOp::Le,  BinaryOp::Gt,
                                             BinaryOp::Ge,  BinaryOp::And, BinaryOp::Or};
inline constexpr UnaryOp kAllUnaryOps[] = {UnaryOp::Neg,     UnaryOp::Not,   UnaryOp::Abs,  UnaryOp::Sqrt,
                                           UnaryOp::Square,  UnaryOp::ToFloat, UnaryOp::IsPhi, UnaryOp::Field};

namespace detail {
[[noreturn]] inline void type_mismatch(const char* op, const Value& a, const Value& b) {
    throw EvalError(std::string("type mismatch in '") + op + "': " + kind_name(a.kind()) + ", " +
                    kind_name(b.kind()));
}

inline Value int_arith(BinaryOp op, std::int64_t x, std::int64_t y) {
    std::int64_t r = 0;
    bool overflow = false;
    switch (op) {
    case BinaryOp::Add: overflow = __builtin_add_overflow(x, y, &r); break;
    case BinaryOp::Sub: overflow = __builtin_sub_overflow(x, y, &r); break;
    case BinaryOp::Mul: overflow = __builtin_mul_overflow(x, y, &r); break;
    case BinaryOp::Mod:
        if (y == 0) throw EvalError("integer modulo by zero");
        r = x % y;
        if (r != 0 && ((r < 0) != (y < 0))) r += y;
        break;
    case BinaryOp::Min: r = std::min(x, y); break;
    case BinaryOp::Max: r = std::max(x, y); break;
    default: break;
    }
    if (overflow) throw EvalError("integer overflow");
    return Value::integer(r);
}

inline Value float_arith(BinaryOp op, double x, double y) {
    switch (op) {
    case BinaryOp::Add: return Value::real(x + y);
    case BinaryOp::Sub: return Value::real(x - y);
    case BinaryOp::Mul: return Value::real(x * y);
    case BinaryOp::Div: return Value::real(x / y);
    case BinaryOp::Mod: return Value::real(std::fmod(x, y));
    case BinaryOp::Min: return Value::real(std::min(x, y));
    case BinaryOp::Max: return Value::real(std::max(x, y));
    default: return {};
    }
}

inline bool values_equal(const Value& a, const Value& b, const char* op) {
    if (a.is_numeric() && b.is_numeric()) {
        if (a.kind() == ValueKind::Int && b.kind() == ValueKind::Int) return a.as_int() == b.as_int();
        return a.as_number() == b.as_number();
    }
    if (a.kind() != b.kind()) type_mismatch(op, a, b);
    return a == b;
}
} // namespace detail

/// Binary scalar operator. phi in either operand yields phi.
inline Value apply(BinaryOp op, const Value& a, const Value& b) {
    if (a.is_phi() || b.is_phi()) return {};
    const char* name = op_name(op);
    switch (op) {
    case BinaryOp::Add:
    case BinaryOp::Sub:
    case BinaryOp::Mul:
    case BinaryOp::Mod:
    case BinaryOp::Min:
    case BinaryOp::Max:
        if (!a.is_numeric() || !b.is_numeric()) detail::type_mismatch(name, a, b);
        if (a.kind() == ValueKind::Int && b.kind() == ValueKind::Int) {
            return detail::int_arith(op, a.as_int(), b.as_int());
        }
        return detail::float_arith(op, a.as_number(), b.as_number());
    case BinaryOp::Div:
        if (!a.is_numeric() || !b.is_numeric()) detail::type_mismatch(name, a, b);
        return Value::real(a.as_number() / b.as_number());
    case BinaryOp::Eq: return Value::boolean(detail::values_equal(a, b, name));
    case BinaryOp::Ne: return Value::boolean(!detail::values_equal(a, b, name));
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: {
        if (!a.is_numeric() || !b.is_numeric()) detail::type_mismatch(name, a, b);
        bool r = false;
        if (a.kind() == ValueKind::Int && b.kind() == ValueKind::Int) {
            auto x = a.as_int(), y = b.as_int();
            r = op == BinaryOp::Lt ? x < y : op == BinaryOp::Le ? x <= y : op == BinaryOp::Gt ? x > y : x >= y;
        } else {
            double x = a.as_number(), y = b.as_number();
            r = op == BinaryOp::Lt ? x < y : op == BinaryOp::Le ? x <= y : op == BinaryOp::Gt ? x > y : x >= y;
        }
        return Value::boolean(r);
    }
    case BinaryOp::And:
    case BinaryOp::Or:
        if (a.kind() != ValueKind::Bool || b.kind() != ValueKind::Bool) detail::type_mismatch(name, a, b);
        return Value::boolean(op == BinaryOp::And ? (a.as_bool() && b.as_bool()) : (a.as_bool() || b.as_bool()));
    }
    return {};
}

/// Unary scalar operator. IsPhi is the one operator that observes phi instead of
/// absorbing it; Field reads `field` from a struct.
inline Value apply(UnaryOp op, const Value& a, std::string_view field = {}) {
    if (op == UnaryOp::IsPhi) return Value::boolean(a.is_phi());
    if (a.is_phi()) return {};
    auto need_number = [&] {
        if (!a.is_numeric()) throw EvalError(std::string("type mismatch in '") + op_name(op) + "': " + kind_name(a.kind()));
    };
    switch (op) {
    case UnaryOp::Neg:
        need_number();
        if (a.kind() == ValueKind::Int) {
            if (a.as_int() == std::numeric_limits<std::int64_t>::min()) throw EvalError("integer overflow");
            return Value::integer(-a.as_int());
        }
        return Value::real(-a.as_float());
    case UnaryOp::Not:
        if (a.kind() != ValueKind::Bool) throw EvalError(std::string("type mismatch in 'not': ") + kind_name(a.kind()));
        return Value::boolean(!a.as_bool());
    case UnaryOp::Abs:
        need_number();
        if (a.kind() == ValueKind::Int) {
            if (a.as_int() == std::numeric_limits<std::int64_t>::min()) throw EvalError("integer overflow");
            return Value::integer(a.as_int() < 0 ? -a.as_int() : a.as_int());
        }
        return Value::real(std::fabs(a.as_float()));
    case UnaryOp::Sqrt: need_number(); return Value::real(std::sqrt(a.as_number()));
    case UnaryOp::Square:
        need_number();
        if (a.kind() == ValueKind::Int) return detail::int_arith(BinaryOp::Mul, a.as_int(), a.as_int());
        return Value::real(a.as_float() * a.as_float());
    case UnaryOp::ToFloat: need_number(); return Value::real(a.as_number());
    case UnaryOp::Field: return a.field(field);
    case UnaryOp::IsPhi: break;
    }
    return {};
}

/// Scalar operator of either arity, applied to an argument list.
struct ScalarOp {
    enum class Arity : std::uint8_t { Unary, Binary } arity;
    BinaryOp binary = BinaryOp::Add;
    UnaryOp unary = UnaryOp::Neg;
    std::string field;

    static ScalarOp of(BinaryOp op) { return {Arity::Binary, op, UnaryOp::Neg, {}}; }
    static ScalarOp of(UnaryOp op, std::string field = {}) { return {Arity::Unary, BinaryOp::Add, op, std::move(field)}; }
};

/// phi if any argument is phi (except for IsPhi), otherwise the scalar result.
inline Value apply_phi(const ScalarOp& op, std::span<const Value> args) {
    const std::size_t want = op.arity == ScalarOp::Arity::Binary ? 2 : 1;
    if (args.size() != want) {
        throw EvalError("arity mismatch: expected " + std::to_string(want) + " got " + std::to_string(args.size()));
    }
    return op.arity == ScalarOp::Arity::Binary ? apply(op.binary, args[0], args[1]) : apply(op.unary, args[0], op.field);
}

// ---------------------------------------------------------------------------
// Lifting scalar functions over value multisets. Singletons broadcast; otherwise values
// pair positionally and sizes must agree.

template <class F>
ValueSet lift(const ValueSet& a, F&& f) {
    if (a.is_single()) return ValueSet(f(a.single()));
    std::vector<Value> out;
    out.reserve(a.size());
    for (const Value& v : a.values()) out.push_back(f(v));
    return ValueSet::of(std::move(out));
}

template <class F>
ValueSet lift(const ValueSet& a, const ValueSet& b, F&& f) {
    if (a.is_single() && b.is_single()) return ValueSet(f(a.single(), b.single()));
    const std::size_t na = a.size(), nb = b.size();
    if (na != nb && na != 1 && nb != 1) {
        throw EvalError("multiset arity mismatch: " + std::to_string(na) + " vs " + std::to_string(nb));
    }
    const std::size_t n = std::max(na, nb);
    std::vector<Value> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(f(a[na == 1 ? 0 : i], b[nb == 1 ? 0 : i]));
    return ValueSet::of(std::move(out));
}

/// N-ary lift with the same broadcasting rule as the binary form.
template <class F>
ValueSet lift_n(std::span<const ValueSet> args, F&& f) {
    std::size_t n = 1;
    bool all_single = true;
    for (const ValueSet& a : args) {
        all_single = all_single && a.is_single();
        if (a.size() == 1) continue;
        if (n != 1 && a.size() != n) {
            throw EvalError("multiset arity mismatch: " + std::to_string(n) + " vs " + std::to_string(a.size()));
        }
        n = a.size();
    }
    std::vector<Value> row(args.size());
    if (all_single) {
        for (std::size_t j = 0; j < args.size(); ++j) row[j] = args[j].single();
        return ValueSet(f(std::span<const Value>(row)));
    }
    std::vector<Value> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < args.size(); ++j) row[j] = args[j][args[j].size() == 1 ? 0 : i];
        out.push_back(f(std::span<const Value>(row)));
    }
    return ValueSet::of(std::move(out));
}

// ---------------------------------------------------------------------------
// Text rendering. Floats always carry a '.', an exponent, or a non-finite spelling so
// that they re-parse as floats.

inline std::string format_float(double d) {
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

inline std::string to_string(const Value& v) {
    switch (v.kind()) {
    case ValueKind::Phi: return "phi";
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return format_float(v.as_float());
    case ValueKind::Struct: {
        std::string s = "{";
        bool first = true;
        for (const auto& [k, f] : v.fields()) {
            if (!first) s += ", ";
            first = false;
            s += k + ": " + to_string(f);
        }
        return s + "}";
    }
    }
    return "?";
}

inline std::string to_string(const ValueSet& s) {
    std::string out = "{";
    bool first = true;
    for (const Value& v : s.values()) {
        if (!first) out += ", ";
        first = false;
        out += to_string(v);
    }
    return out + "}";
}

} // namespace tilt
