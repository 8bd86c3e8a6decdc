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

#include "f2f/random.hpp"
#include "f2f/runtime.hpp"

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

namespace f2f::sim {

/// Deterministic discrete-event loop: one virtual millisecond clock, events
/// ordered by (time, insertion sequence), one seeded generator per run.
class Simulator final : public Scheduler {
public:
    explicit Simulator(std::uint64_t seed) : rng_(seed) {}

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    [[nodiscard]] TimeMs now() const override { return now_; }
    TimerId schedule(TimeMs delay, std::function<void()> fn) override;
    TimerId schedule_at(TimeMs when, std::function<void()> fn);
    void cancel(TimerId id) override;

    /// Runs the next event. Returns false when the queue is empty.
    bool step();
    /// Runs every event with time <= until, then advances the clock to until.
    void run_until(TimeMs until);
    /// Runs until the queue drains or max_events were processed.
    void run(std::uint64_t max_events = UINT64_MAX);

    [[nodiscard]] bool idle() const { return handlers_.empty(); }
    [[nodiscard]] std::uint64_t events_processed() const { return processed_; }
    [[nodiscard]] std::size_t pending() const { return handlers_.size(); }

    Rng& rng() { return rng_; }

    /// Invoked after every processed event (global safety checks).
    void set_after_event(std::function<void()> hook) { after_event_ = std::move(hook); }

private:
    struct Key {
        TimeMs time;
        std::uint64_t seq;
        bool operator>(const Key& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    TimeMs now_ = 0;
    std::uint64_t next_seq_ = 1;
    std::uint64_t processed_ = 0;
    std::priority_queue<Key, std::vector<Key>, std::greater<>> queue_;
    std::unordered_map<std::uint64_t, std::function<void()>> handlers_;
    Rng rng_;
    std::function<void()> after_event_;
};

/// Trace collector: "<time> <actor> <text>" lines.
class Trace final : public EventLog {
public:
    explicit Trace(const Scheduler& clock) : clock_(clock) {}

    void log(std::string_view actor, std::string_view line) override;

    [[nodiscard]] const std::vector<std::string>& lines() const { return lines_; }
    [[nodiscard]] std::string text() const;

private:
    const Scheduler& clock_;
    std::vector<std::string> lines_;
};

}  // namespace f2f::sim
