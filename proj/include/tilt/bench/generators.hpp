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

// Deterministic synthetic streams.
//
// The generator is std::mt19937_64, whose output sequence is fixed by the standard. Raw
// 64-bit draws are mapped to integers by modulo, never through std distributions, whose
// algorithms vary across standard libraries. Float payloads are integers scaled by a power
// of two, so sums over them stay exact and every platform prints the same digits.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilt/core/event.hpp"

namespace tilt::bench {

/// One tick is one millisecond at 1000 Hz.
inline constexpr Ticks kTicksPerSecond = 1000;

enum class StreamKind : std::uint8_t {
    /// Payloads uniform on [1, 1000] in steps of 2^-8.
    Uniform,
    /// Random walk on [1, 1000] in steps of 2^-8.
    PriceWalk,
    /// Struct {key, amount}; amounts in (0, 1024] in steps of 2^-4.
    Transactions,
    /// ECG-like beats plus noise, |x| <= 4 in steps of 2^-4.
    Signal,
    /// Two triangle tones plus periodic fault impulses, |x| <= 4 in steps of 2^-4.
    Vibration,
    /// Struct {user_id, page_id, ad_id, event_type} with unique user ids.
    Clicks,
};

inline const char* kind_name(StreamKind k) {
    switch (k) {
    case StreamKind::Uniform: return "uniform";
    case StreamKind::PriceWalk: return "price-walk";
    case StreamKind::Transactions: return "transactions";
    case StreamKind::Signal: return "signal";
    case StreamKind::Vibration: return "vibration";
    case StreamKind::Clicks: return "clicks";
    }
    return "?";
}

struct StreamParams {
    StreamKind kind = StreamKind::Uniform;
    /// Events per second; 1000 must be a multiple of it.
    int freq_hz = 1000;
    /// Chance that a dropout burst of 1 to 100 events starts at any event.
    double dropout = 0.0;
    /// Key cardinality for Transactions.
    int keys = 8;
};

/// Ticks per event at `freq_hz`.
inline Ticks event_width(int freq_hz) {
    if (freq_hz < 1 || kTicksPerSecond % freq_hz != 0) {
        throw std::invalid_argument("frequency " + std::to_string(freq_hz) + " Hz does not divide the " +
                                    std::to_string(kTicksPerSecond) + "-tick second");
    }
    return kTicksPerSecond / freq_hz;
}

namespace detail {

class Draw {
  public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return rng_() % n; }
    /// Integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }
    /// True with probability p, resolved to 1e-6.
    bool chance(double p) { return p > 0 && static_cast<double>(below(1000000)) < p * 1e6; }

  private:
    std::mt19937_64 rng_;
};

/// Triangular bump of `height` at `centre`, zero beyond `half` ticks away.
inline std::int64_t bump(Ticks x, Ticks centre, Ticks half, std::int64_t height) {
    const Ticks d = x > centre ? x - centre : centre - x;
    return d >= half ? 0 : height * (half - d) / half;
}

/// Triangle wave of period `period` swinging over [-amp, amp].
inline std::int64_t triangle(Ticks t, Ticks period, std::int64_t amp) {
    const Ticks phase = t % period;
    const Ticks d = phase > period / 2 ? period - phase : phase;
    return amp - 4 * amp * d / period;
}

/// ECG-like beat in sixteenths at `phase` ticks into an 800-tick period: P wave, QRS
/// complex and T wave.
inline std::int64_t beat(Ticks phase) {
    return bump(phase, 160, 40, 4) - bump(phase, 285, 10, 4) + bump(phase, 300, 12, 48) - bump(phase, 318, 10, 8) +
           bump(phase, 520, 60, 8);
}

} // namespace detail

/// Events (i w, (i + 1) w] for i in [0, duration / w) with w = 1000 / freq_hz, minus
/// dropout bursts. Consecutive float payloads always differ, so every event is its own
/// snapshot. The same seed and parameters give the same stream on every platform.
inline std::vector<Event> gen_synthetic(const StreamParams& p, Ticks duration, std::uint64_t seed) {
    const Ticks w = event_width(p.freq_hz);
    if (duration < 0) throw std::invalid_argument("duration must be non-negative");
    if (p.kind == StreamKind::Transactions && p.keys < 1) throw std::invalid_argument("keys must be at least 1");
    const Ticks n = duration / w;
    detail::Draw draw(seed);
    std::vector<Event> out;
    out.reserve(static_cast<std::size_t>(n));

    std::int64_t prev = 0, price = 100 * 256, next_user = 0;
    Ticks skip = 0;
    for (Ticks i = 0; i < n; ++i) {
        const Ticks t = i * w;
        // Draws happen whether or not the event is dropped so dropout never shifts payloads.
        Value payload;
        switch (p.kind) {
        case StreamKind::Uniform: {
            std::int64_t k;
            do k = draw.between(256, 256000); while (k == prev);
            prev = k;
            payload = Value::real(static_cast<double>(k) / 256.0);
            break;
        }
        case StreamKind::PriceWalk: {
            std::int64_t step;
            do step = draw.between(-64, 64); while (step == 0 || price + step < 256 || price + step > 256000);
            price += step;
            payload = Value::real(static_cast<double>(price) / 256.0);
            break;
        }
        case StreamKind::Transactions: {
            const auto key = static_cast<std::int64_t>(draw.below(static_cast<std::uint64_t>(p.keys)));
            // Mostly small amounts with a rare large one.
            const std::int64_t amount = draw.chance(0.01) ? draw.between(4096, 16384) : draw.between(1, 2048);
            payload = Value::structure({{"key", Value::integer(key)}, {"amount", Value::real(static_cast<double>(amount) / 16.0)}});
            break;
        }
        case StreamKind::Signal:
        case StreamKind::Vibration: {
            // Integer arithmetic only, so the stream is identical on every platform.
            std::int64_t k = p.kind == StreamKind::Signal
                                 ? detail::beat(t % 800) + draw.between(-3, 3)
                                 : detail::triangle(t, 34, 24) + detail::triangle(t, 6, 12) + draw.between(-4, 4) +
                                       (t % 237 == 0 ? 16 : 0);
            k = std::clamp<std::int64_t>(k, -64, 64);
            if (k == prev) k += k < 64 ? 1 : -1;
            prev = k;
            payload = Value::real(static_cast<double>(k) / 16.0);
            break;
        }
        case StreamKind::Clicks: {
            next_user += draw.between(1, 16);
            payload = Value::structure({{"user_id", Value::integer(next_user)},
                                        {"page_id", Value::integer(draw.between(0, 999))},
                                        {"ad_id", Value::integer(draw.between(0, 99))},
                                        {"event_type", Value::integer(draw.between(0, 2))}});
            break;
        }
        }
        if (skip == 0 && draw.chance(p.dropout)) skip = draw.between(1, 100);
        if (skip > 0) {
            --skip;
            continue;
        }
        out.push_back({Time(t), Time(t + w), std::move(payload)});
    }
    return out;
}

/// Float streams per key of a {key, amount} event list, in key order.
inline std::vector<std::vector<Event>> split_by_key(const std::vector<Event>& events, const std::string& key,
                                                    const std::string& value) {
    std::map<std::int64_t, std::vector<Event>> groups;
    for (const Event& e : events) {
        if (e.payload.kind() != ValueKind::Struct) throw std::invalid_argument("keyed stream needs struct payloads");
        groups[e.payload.field(key).as_int()].push_back({e.start, e.end, e.payload.field(value)});
    }
    std::vector<std::vector<Event>> out;
    for (auto& [k, g] : groups) out.push_back(std::move(g));
    return out;
}

} // namespace tilt::bench
