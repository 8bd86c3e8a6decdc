/*
   Copyright 2026 The f2fnet Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include "f2f/address.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace f2f {

using TimerId = std::uint64_t;

/// Single-threaded event loop contract the middleware is written against.
/// Callbacks never run re-entrantly from inside schedule().
class Scheduler {
public:
    virtual ~Scheduler() = default;

    [[nodiscard]] virtual TimeMs now() const = 0;
    virtual TimerId schedule(TimeMs delay, std::function<void()> fn) = 0;
    /// Cancelling an already-fired or unknown timer is a no-op.
    virtual void cancel(TimerId id) = 0;
};

/// Line-oriented protocol event log. The simulator turns it into the trace.
class EventLog {
public:
    virtual ~EventLog() = default;
    virtual void log(std::string_view actor, std::string_view line) = 0;
};

class NullLog final : public EventLog {
public:
    void log(std::string_view, std::string_view) override {}
};

}  // namespace f2f
