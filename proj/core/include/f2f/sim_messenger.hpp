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

#include "f2f/config.hpp"
#include "f2f/messenger.hpp"
#include "f2f/simulator.hpp"

#include <map>
#include <string>

namespace f2f::sim {

/// Simulated messenger: reliable unless a loss rate is configured, unordered
/// under jitter, and independent of overlay attachment.
class SimMessenger final : public Messenger {
public:
    SimMessenger(Simulator& sim, MessengerConfig config) : sim_(sim), config_(config) {}

    void send(const OobMessage& message) override;
    void subscribe(const std::string& number, std::function<void(const OobMessage&)> inbox) override {
        inboxes_[number] = std::move(inbox);
    }

    [[nodiscard]] std::uint64_t sent_from(const std::string& number) const;
    [[nodiscard]] std::uint64_t delivered() const { return delivered_; }
    [[nodiscard]] std::uint64_t dropped() const { return dropped_; }

private:
    Simulator& sim_;
    MessengerConfig config_;
    std::map<std::string, std::function<void(const OobMessage&)>> inboxes_;
    std::map<std::string, std::uint64_t> sent_;
    std::uint64_t delivered_ = 0;
    std::uint64_t dropped_ = 0;
};

}  // namespace f2f::sim
