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

#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace tilt {

/// Signed tick offset between two points on the timeline.
using Ticks = std::int64_t;

class TimeOverflow : public std::overflow_error {
  public:
    using std::overflow_error::overflow_error;
};

namespace detail {
inline Ticks checked_add(Ticks a, Ticks b) {
    Ticks out;
    if (__builtin_add_overflow(a, b, &out)) {
        throw TimeOverflow("tick arithmetic overflow: " + std::to_string(a) + " + " + std::to_string(b));
    }
    return out;
}
inline Ticks checked_sub(Ticks a, Ticks b) {
    Ticks out;
    if (__builtin_sub_overflow(a, b, &out)) {
        throw TimeOverflow("tick arithmetic overflow: " + std::to_string(a) + " - " + std::to_string(b));
    }
    return out;
}
} // namespace detail

/// A point on the discrete timeline. Time::min() stands for minus infinity and is only
/// meaningful as a buffer base.
class Time {
  public:
    constexpr Time() = default;
    constexpr explicit Time(Ticks ticks) : ticks_(ticks) {}

    static constexpr Time min() { return Time(std::numeric_limits<Ticks>::min()); }
    static constexpr Time max() { return Time(std::numeric_limits<Ticks>::max()); }

    [[nodiscard]] constexpr Ticks ticks() const { return ticks_; }
    [[nodiscard]] constexpr bool is_min() const { return ticks_ == std::numeric_limits<Ticks>::min(); }

    friend constexpr auto operator<=>(Time, Time) = default;

    friend Time operator+(Time t, Ticks d) { return Time(detail::checked_add(t.ticks_, d)); }
    friend Time operator-(Time t, Ticks d) { return Time(detail::checked_sub(t.ticks_, d)); }
    friend Ticks operator-(Time a, Time b) { return detail::checked_sub(a.ticks_, b.ticks_); }
    Time& operator+=(Ticks d) { return *this = *this + d; }
    Time& operator-=(Ticks d) { return *this = *this - d; }

  private:
    Ticks ticks_ = 0;
};

inline std::string to_string(Time t) { return t.is_min() ? std::string("-inf") : std::to_string(t.ticks()); }

/// Floor division that rounds toward minus infinity.
constexpr Ticks floor_div(Ticks a, Ticks b) {
    Ticks q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

/// Largest multiple of `precision` that is <= t.
inline Ticks grid_floor(Ticks t, Ticks precision) { return floor_div(t, precision) * precision; }

/// Smallest multiple of `precision` that is >= t.
inline Ticks grid_ceil(Ticks t, Ticks precision) {
    Ticks f = grid_floor(t, precision);
    return f == t ? t : detail::checked_add(f, precision);
}

} // namespace tilt
