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

// Randomized streams and operator graphs shared by the test suites.

#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "tilt/core/snapshot_buffer.hpp"
#include "tilt/frontend/graph.hpp"

namespace tilt::fixtures {

inline Event ev(Ticks s, Ticks e, Value v) { return {Time(s), Time(e), std::move(v)}; }

inline SnapshotBuffer snaps(std::vector<std::pair<Ticks, ValueSet>> list, Time base = Time::min()) {
    std::vector<Snapshot> out;
    for (auto& [t, v] : list) out.push_back({Time(t), std::move(v)});
    return SnapshotBuffer(base, std::move(out));
}

struct StreamShape {
    Ticks start = 0;
    Ticks end = 300;
    Ticks max_gap = 4;
    Ticks max_width = 8;
    /// Payloads are multiples of 1/16 in [-range, range].
    int range = 32;
    /// Chance that an event repeats the previous payload.
    double repeat = 0.2;
};

/// Non-overlapping events in (start, end] with random gaps, widths and dyadic payloads.
inline std::vector<Event> random_events(std::mt19937_64& rng, const StreamShape& s = {}) {
    std::uniform_int_distribution<Ticks> gap(0, s.max_gap), width(1, s.max_width);
    std::uniform_int_distribution<int> val(-16 * s.range, 16 * s.range);
    std::bernoulli_distribution rep(s.repeat), no_gap(0.5);
    std::vector<Event> out;
    Ticks t = s.start;
    double last = 0.0;
    while (true) {
        Ticks a = t + (no_gap(rng) ? 0 : gap(rng));
        Ticks b = a + width(rng);
        if (b > s.end) break;
        double v = !out.empty() && rep(rng) ? last : val(rng) / 16.0;
        // Without repeats, neighbours always differ so events map one-to-one onto snapshots.
        while (s.repeat == 0.0 && !out.empty() && v == last) v = val(rng) / 16.0;
        out.push_back(ev(a, b, Value::real(v)));
        last = v;
        t = b;
    }
    return out;
}

inline SnapshotBuffer random_stream(std::mt19937_64& rng, const StreamShape& s = {}) {
    return events_to_ssbuf(random_events(rng, s), Time(s.start - 64));
}

/// Random operator graph over `inputs` float streams. Invertible windows are only placed
/// over nodes whose values stay exactly representable, so sliding with deacc is exact.
struct RandomGraph {
    frontend::Graph graph;
    std::vector<std::string> inputs;
};

inline RandomGraph random_graph(std::mt19937_64& rng, int inputs = 2, int max_ops = 6) {
    using namespace frontend;
    using ir::lit;
    struct Info {
        Graph::Id id;
        int mag_bits, frac_bits;
        bool exact() const { return mag_bits + frac_bits <= 48; }
    };
    RandomGraph out;
    std::vector<Info> nodes;
    for (int i = 0; i < inputs; ++i) {
        out.inputs.push_back("in" + std::to_string(i));
        nodes.push_back({out.graph.input(out.inputs.back()), 6, 4});
    }
    auto pick = [&]() -> Info& {
        // Favour recent nodes so graphs are deep rather than wide.
        std::uniform_int_distribution<std::size_t> d(0, nodes.size() - 1), r(nodes.size() / 2, nodes.size() - 1);
        return nodes[std::bernoulli_distribution(0.6)(rng) ? r(rng) : d(rng)];
    };
    auto roll = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    const int ops = 1 + roll(max_ops);
    for (int k = 0; k < ops; ++k) {
        Info up = pick();
        Info made = up;
        switch (roll(7)) {
        case 0: {
            switch (roll(3)) {
            case 0: made.id = out.graph.select(up.id, in() + lit(1.5)); made.mag_bits++; break;
            case 1: made.id = out.graph.select(up.id, in() * lit(0.5)); made.frac_bits++; break;
            default: made.id = out.graph.select(up.id, in() * lit(-3.0)); made.mag_bits += 2; break;
            }
            break;
        }
        case 1: made.id = out.graph.where(up.id, in() > lit(static_cast<double>(roll(9) - 4))); break;
        case 2: {
            Info other = pick();
            made.mag_bits = std::max(up.mag_bits, other.mag_bits) + 1;
            made.frac_bits = std::max(up.frac_bits, other.frac_bits);
            if (roll(3) == 0) {
                made.id = out.graph.join(up.id, other.id, ir::if_(ir::is_phi(right()), left(), left() - right()),
                                         JoinKind::Left);
            } else {
                made.id = out.graph.join(up.id, other.id, roll(2) ? left() + right() : left() - right());
            }
            break;
        }
        case 3: {
            static const char* exact_reds[] = {"sum", "avg", "stddev"};
            static const char* order_reds[] = {"max", "min", "count"};
            const Ticks size = 1 + roll(12);
            const Ticks stride = 1 + roll(static_cast<int>(std::min<Ticks>(size, 4)));
            bool invertible = up.exact() && roll(2);
            std::string red = invertible ? exact_reds[roll(3)] : order_reds[roll(3)];
            ir::Expr selector = nullptr;
            if (invertible && roll(3) == 0 && 2 * (up.mag_bits + up.frac_bits) <= 40) {
                selector = in() * in();
                made.mag_bits *= 2;
                made.frac_bits *= 2;
            }
            made.id = out.graph.window(up.id, red, size, stride, selector);
            if (red == "sum") made.mag_bits += 4;
            else if (red == "count") made = {made.id, 5, 0};
            else if (red == "avg" || red == "stddev") made.mag_bits = 99;
            break;
        }
        case 4: made.id = out.graph.shift(up.id, roll(6)); break;
        case 5: made.id = out.graph.chop(up.id, 1 + roll(4)); break;
        default: made.id = out.graph.window(up.id, "max", 1 + roll(6), 1); break;
        }
        nodes.push_back(made);
    }
    out.graph.set_output(nodes.back().id);
    return out;
}

} // namespace tilt::fixtures
