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

#include "f2f/sim_messenger.hpp"

namespace f2f::sim {

void SimMessenger::send(const OobMessage& message) {
    ++sent_[message.from_number];
    if (config_.loss > 0.0 && sim_.rng().unit() < config_.loss) {
        ++dropped_;
        return;
    }
    const int copies = config_.duplicate > 0.0 && sim_.rng().unit() < config_.duplicate ? 2 : 1;
    for (int i = 0; i < copies; ++i) {
        TimeMs delay = config_.latency_ms;
        if (config_.jitter_ms > 0) delay += sim_.rng().uniform(0, config_.jitter_ms);
        sim_.schedule(delay, [this, message] {
            auto it = inboxes_.find(message.to_number);
            if (it == inboxes_.end()) {
                ++dropped_;
                return;
            }
            ++delivered_;
            it->second(message);
        });
    }
}

std::uint64_t SimMessenger::sent_from(const std::string& number) const {
    auto it = sent_.find(number);
    return it == sent_.end() ? 0 : it->second;
}

}  // namespace f2f::sim
