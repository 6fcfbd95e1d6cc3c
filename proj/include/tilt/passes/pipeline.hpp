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

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tilt/frontend/graph.hpp"
#include "tilt/ir/sexpr.hpp"
#include "tilt/passes/boundaries.hpp"
#include "tilt/passes/fuse.hpp"

namespace tilt::passes {

struct CompileOptions {
    bool fuse = true;
};

/// Every IR stage of one compilation. `final` is what the kernel is synthesized from.
struct Compiled {
    ir::Query lowered;
    ir::Query resolved;
    ir::Query fused;
    ir::Query final;
};

inline constexpr std::array<std::string_view, 4> kStages = {"lowered", "resolved", "fused", "final"};

inline Compiled compile(const frontend::Graph& g, const CompileOptions& opts = {}) {
    Compiled c;
    c.lowered = frontend::lower(g);
    c.resolved = resolve_boundaries(c.lowered);
    c.fused = fuse(c.resolved);
    c.final = opts.fuse ? c.fused : c.resolved;
    return c;
}

/// The printed IR of `stage`; throws std::invalid_argument for unknown stages.
inline std::string dump(const Compiled& c, std::string_view stage) {
    if (stage == "lowered") return ir::print(c.lowered);
    if (stage == "resolved") return ir::print(c.resolved);
    if (stage == "fused") return ir::print(c.fused);
    if (stage == "final") return ir::print(c.final);
    std::string names;
    for (auto s : kStages) names += (names.empty() ? "" : ", ") + std::string(s);
    throw std::invalid_argument("unknown IR stage '" + std::string(stage) + "' (expected one of: " + names + ")");
}

} // namespace tilt::passes
