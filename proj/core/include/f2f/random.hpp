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

#include <cstdint>
#include <random>

namespace f2f {

/// The one seeded generator of a run. Everything random in the middleware
/// (nonces, one-time codes, ids, jitter) draws from an instance of this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    std::uint32_t next_u32() { return static_cast<std::uint32_t>(engine_() >> 32); }

    /// Uniform in [lo, hi] inclusive.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
    }

    double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    template <typename Container>
    void fill(Container& out) {
        for (auto& b : out) b = static_cast<std::uint8_t>(engine_() >> 56);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace f2f
