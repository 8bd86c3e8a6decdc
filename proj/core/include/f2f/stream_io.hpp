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

#include "f2f/runtime.hpp"
#include "f2f/transport.hpp"

#include <functional>
#include <optional>

namespace f2f {

using ReadCallback = std::function<void(std::optional<Bytes>)>;

/// Delivers exactly `count` bytes, or nullopt on end-of-stream, reset or
/// timeout. Owns the stream's readable handler until it completes.
void read_exact(Scheduler& scheduler, const StreamPtr& stream, std::size_t count, TimeMs timeout_ms,
                ReadCallback done);

/// Reads one length-prefixed wire frame (header included in the result).
/// Impossible lengths complete with nullopt.
void read_frame(Scheduler& scheduler, const StreamPtr& stream, TimeMs timeout_ms, ReadCallback done);

/// Writes everything, waiting for send-buffer space as needed. Completes with
/// false when the stream is broken or closed.
void write_all(const StreamPtr& stream, Bytes data, std::function<void(bool)> done);

}  // namespace f2f
