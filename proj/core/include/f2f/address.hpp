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

#include <compare>
#include <cstdint>
#include <string>

namespace f2f {

/// Simulated or wall-clock milliseconds.
using TimeMs = std::uint64_t;

/// Opaque reachable endpoint name issued by the overlay transport (the
/// stand-in for an onion address).
struct OverlayAddress {
    std::string value;

    [[nodiscard]] bool empty() const { return value.empty(); }
    auto operator<=>(const OverlayAddress&) const = default;
};

/// Identifies one (network, access point) combination a device can attach to.
struct NetworkAttachment {
    std::string id;

    auto operator<=>(const NetworkAttachment&) const = default;
};

}  // namespace f2f
