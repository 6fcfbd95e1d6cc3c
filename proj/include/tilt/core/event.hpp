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

#include <stdexcept>
#include <string>

#include "tilt/core/time.hpp"
#include "tilt/core/value.hpp"

namespace tilt {

class MalformedStream : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A payload valid over the half-open interval (start, end].
struct Event {
    Time start;
    Time end;
    Value payload;

    friend bool operator==(const Event&, const Event&) = default;
};

inline std::string to_string(const Event& e) {
    return "(" + to_string(e.start) + "," + to_string(e.end) + "]:" + to_string(e.payload);
}

} // namespace tilt
