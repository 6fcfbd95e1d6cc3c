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

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "tilt/core/value.hpp"

namespace tilt::ir {

/// Pure scalar function callable from IR. Arguments are never phi: a phi argument makes
/// the call phi before the function runs.
struct ScalarFunction {
    std::string name;
    std::size_t arity = 0;
    std::function<Value(std::span<const Value>)> fn;
};

class FunctionRegistry {
  public:
    static FunctionRegistry& global() {
        static FunctionRegistry reg;
        return reg;
    }

    void add(ScalarFunction f) {
        std::lock_guard lock(mu_);
        auto name = f.name;
        fns_[name] = std::make_shared<const ScalarFunction>(std::move(f));
    }

    [[nodiscard]] std::shared_ptr<const ScalarFunction> find(const std::string& name) const {
        std::lock_guard lock(mu_);
        auto it = fns_.find(name);
        return it == fns_.end() ? nullptr : it->second;
    }

    [[nodiscard]] const ScalarFunction& at(const std::string& name) const {
        auto p = find(name);
        if (!p) throw std::out_of_range("unknown function '" + name + "'");
        return *p;
    }

  private:
    FunctionRegistry() {
        auto num = [](const Value& v) { return v.as_number(); };
        add({"pow", 2, [num](std::span<const Value> a) { return Value::real(std::pow(num(a[0]), num(a[1]))); }});
        // a + (b - a) * w
        add({"lerp", 3, [num](std::span<const Value> a) {
                 return Value::real(num(a[0]) + (num(a[1]) - num(a[0])) * num(a[2]));
             }});
        add({"pair", 2, [](std::span<const Value> a) { return Value::structure({{"first", a[0]}, {"second", a[1]}}); }});
    }

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const ScalarFunction>> fns_;
};

/// Applies `f` with phi absorption and an arity check.
inline Value call_function(const ScalarFunction& f, std::span<const Value> args) {
    if (args.size() != f.arity) {
        throw EvalError("function '" + f.name + "' takes " + std::to_string(f.arity) + " arguments, got " +
                        std::to_string(args.size()));
    }
    for (const Value& v : args) {
        if (v.is_phi()) return {};
    }
    return f.fn(args);
}

} // namespace tilt::ir
