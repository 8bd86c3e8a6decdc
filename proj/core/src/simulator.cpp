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

#include "f2f/simulator.hpp"

#include <cstdio>

namespace f2f::sim {

TimerId Simulator::schedule(TimeMs delay, std::function<void()> fn) {
    return schedule_at(now_ + delay, std::move(fn));
}

TimerId Simulator::schedule_at(TimeMs when, std::function<void()> fn) {
    if (when < now_) when = now_;
    const auto seq = next_seq_++;
    queue_.push(Key{when, seq});
    handlers_.emplace(seq, std::move(fn));
    return seq;
}

void Simulator::cancel(TimerId id) {
    handlers_.erase(id);
}

bool Simulator::step() {
    while (!queue_.empty()) {
        const auto key = queue_.top();
        queue_.pop();
        auto it = handlers_.find(key.seq);
        if (it == handlers_.end()) continue;  // cancelled
        auto fn = std::move(it->second);
        handlers_.erase(it);
        now_ = key.time;
        ++processed_;
        fn();
        if (after_event_) after_event_();
        return true;
    }
    return false;
}

void Simulator::run_until(TimeMs until) {
    while (!queue_.empty()) {
        // Skip cancelled heads so the time check sees a live event.
        if (!handlers_.contains(queue_.top().seq)) {
            queue_.pop();
            continue;
        }
        if (queue_.top().time > until) break;
        step();
    }
    if (now_ < until) now_ = until;
}

void Simulator::run(std::uint64_t max_events) {
    for (std::uint64_t i = 0; i < max_events && step(); ++i) {
    }
}

void Trace::log(std::string_view actor, std::string_view line) {
    char stamp[32];
    std::snprintf(stamp, sizeof stamp, "%10llu ", static_cast<unsigned long long>(clock_.now()));
    std::string out(stamp);
    out.append(actor);
    out.push_back(' ');
    out.append(line);
    lines_.push_back(std::move(out));
}

std::string Trace::text() const {
    std::string out;
    for (const auto& l : lines_) {
        out += l;
        out.push_back('\n');
    }
    return out;
}

}  // namespace f2f::sim
