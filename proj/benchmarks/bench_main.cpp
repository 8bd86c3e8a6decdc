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

#include "f2f/channel.hpp"
#include "f2f/scenario.hpp"
#include "f2f/wire.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace f2f;

const KeyPair& keys() {
    static const KeyPair kp = generate_keypair(seed_from_u64(1));
    return kp;
}

void BM_SignConnectionMessage(benchmark::State& state) {
    wire::ConnectionMessage msg;
    msg.random_number = 0xdeadbeef;
    msg.body = wire::SystemMessageBody{wire::AddressQuery{}};
    for (auto _ : state) benchmark::DoNotOptimize(wire::encode_connection_message(msg, keys().private_key));
}
BENCHMARK(BM_SignConnectionMessage);

void BM_DecodeConnectionMessage(benchmark::State& state) {
    wire::ConnectionMessage msg;
    msg.random_number = 7;
    msg.body = wire::ApplicationBody{};
    const auto frame = wire::encode_connection_message(msg, keys().private_key);
    const wire::KeyLookup lookup = [](const PeerId&) { return std::optional<PublicKey>(keys().public_key); };
    for (auto _ : state) benchmark::DoNotOptimize(wire::decode_connection_message(frame, lookup));
}
BENCHMARK(BM_DecodeConnectionMessage);

void BM_WindowAppend(benchmark::State& state) {
    SendWindow window(64 * 1024);
    const Bytes chunk(static_cast<std::size_t>(state.range(0)), 0x55);
    for (auto _ : state) window.append(chunk);
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_WindowAppend)->Arg(512)->Arg(16 * 1024);

void BM_WindowReplay(benchmark::State& state) {
    SendWindow window(64 * 1024);
    window.append(Bytes(200'000, 0x11));
    const auto from = window.total_sent() - static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(window.replay_from(from));
}
BENCHMARK(BM_WindowReplay)->Arg(1024)->Arg(64 * 1024);

// Whole simulated runs: wall-clock cost of the simulator itself.

void BM_ChannelTransfer1MiB(benchmark::State& state) {
    const auto scenario = sim::parse_scenario(R"(
peer A net=a
peer B net=b
capability bulk
service B bulk sink
friend A B
at 1s transfer t A B bulk 1MiB
fault break-stream t 500000
)");
    std::uint64_t seed = 1;
    for (auto _ : state) {
        auto result = sim::run_scenario(scenario, seed++);
        if (!result.world->transfer("t")->ok()) state.SkipWithError("transfer did not complete");
    }
}
BENCHMARK(BM_ChannelTransfer1MiB)->Unit(benchmark::kMillisecond);

void BM_Figure4(benchmark::State& state) {
    const auto scenario = sim::load_scenario(F2F_PRESET_DIR "/figure4.scn");
    std::uint64_t seed = 1;
    for (auto _ : state) {
        auto result = sim::run_scenario(scenario, seed++);
        if (!result.passed()) state.SkipWithError("figure4 predicates failed");
    }
}
BENCHMARK(BM_Figure4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
