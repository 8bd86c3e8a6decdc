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

#include "f2f/bytes.hpp"

#include <functional>
#include <string>

namespace f2f {

/// One out-of-band message (a data SMS in the deployed system).
struct OobMessage {
    std::string from_number;
    std::string to_number;
    Bytes payload;
};

/// Out-of-band channel keyed by phone number. Delivery does not depend on
/// overlay attachment.
class Messenger {
public:
    virtual ~Messenger() = default;

    virtual void send(const OobMessage& message) = 0;
    /// Messages addressed to `number` are handed to `inbox` one at a time.
    virtual void subscribe(const std::string& number, std::function<void(const OobMessage&)> inbox) = 0;
};

}  // namespace f2f
