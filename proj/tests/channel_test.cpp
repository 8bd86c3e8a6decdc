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

#include "testkit.hpp"

#include <gtest/gtest.h>

namespace f2f {
namespace {

Bytes iota_bytes(std::size_t n, std::uint8_t start = 0) {
    Bytes out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(start + i);
    return out;
}

TEST(SendWindow, ReplaysTail) {
    SendWindow w(4);
    w.append(iota_bytes(3));
    EXPECT_EQ(w.replay_from(0), iota_bytes(3));
    EXPECT_EQ(w.replay_from(3), Bytes{});
    w.append(iota_bytes(3, 3));  // total 6, ring holds 2..5
    EXPECT_EQ(w.total_sent(), 6u);
    EXPECT_EQ(w.write_position(), 2u);
    EXPECT_EQ(w.replay_from(2), iota_bytes(4, 2));
    EXPECT_FALSE(w.replay_from(1));
    EXPECT_THROW((void)w.replay_from(7), std::invalid_argument);
}

TEST(SendWindow, AppendLargerThanCapacity) {
    SendWindow w(4);
    w.append(iota_bytes(10));
    EXPECT_EQ(w.replay_from(6), iota_bytes(4, 6));
    EXPECT_FALSE(w.replay_from(5));
    EXPECT_THROW(SendWindow(0), std::invalid_argument);
}

TEST(SendWindow, WrapExample) {
    SendWindow w(8);
    w.append(iota_bytes(13));
    EXPECT_EQ(w.total_sent(), 13u);
    EXPECT_EQ(w.ring(), (Bytes{8, 9, 10, 11, 12, 5, 6, 7}));
    EXPECT_EQ(w.replay_from(10), (Bytes{10, 11, 12}));
    EXPECT_EQ(w.replay_from(13), Bytes{});
    EXPECT_FALSE(w.replay_from(4));  // 9 bytes back, window holds 8
    EXPECT_EQ(w.replay_from(5), iota_bytes(8, 5));

    const auto before = w.ring();
    w.append(Bytes{});
    EXPECT_EQ(w.ring(), before);
    EXPECT_EQ(w.total_sent(), 13u);
}

TEST(SendWindow, ExactlyFullWrapsToZero) {
    SendWindow w(8);
    w.append(iota_bytes(8, 100));
    EXPECT_EQ(w.ring(), iota_bytes(8, 100));
    EXPECT_EQ(w.write_position(), 0u);
}

TEST(SendWindow, MatchesOracleSmallBound) {
    const auto report = testkit::check_window_oracle(6, 20);
    EXPECT_GT(report.cases, 100u);
    EXPECT_GT(report.exceeded, 0u);
    EXPECT_TRUE(report.mismatches.empty()) << report.mismatches.front();
}

TEST(Channel, FidelityAcrossDisconnects) {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto run = testkit::run_channel_fidelity(seed);
        EXPECT_TRUE(run.exact) << "seed " << seed << "\n" << run.detail;
        EXPECT_EQ(run.app_errors, 0u) << "seed " << seed;
        EXPECT_GE(run.faults, 1u);
    }
}

TEST(Channel, ReconnectPresetPasses) {
    const auto result = sim::run_scenario(sim::load_scenario(testkit::preset_dir() / "reconnect.scn"), 7);
    for (const auto& p : result.predicates) EXPECT_TRUE(p.passed) << p.text << ": " << p.detail;
    EXPECT_FALSE(result.violation);
}

TEST(Channel, OutageLongerThanGraceSurfacesError) {
    const auto scenario = sim::parse_scenario(R"(
config channel.grace 5000
peer A net=lan-a
peer B net=lan-b
capability bulk
service B bulk sink
friend A B
at 1s transfer t A B bulk 256KiB
fault detach-during t 100000 B 30s
run-until 120s
expect transfer-failed t
expect count A app-errors >= 1
expect count A teardowns >= 1
)");
    const auto result = sim::run_scenario(scenario, 3);
    for (const auto& p : result.predicates) EXPECT_TRUE(p.passed) << p.text << ": " << p.detail;
}

TEST(Channel, DisabledChannelsSurfaceBreaksDirectly) {
    const auto scenario = sim::parse_scenario(R"(
config channel.enabled false
peer A net=lan-a
peer B net=lan-b
capability bulk
service B bulk sink
friend A B
at 1s transfer t A B bulk 256KiB
fault break-stream t 100000
run-until 60s
expect transfer-failed t
expect count A resumes == 0
expect count A channels-opened == 0
)");
    const auto result = sim::run_scenario(scenario, 4);
    for (const auto& p : result.predicates) EXPECT_TRUE(p.passed) << p.text << ": " << p.detail;
}


TEST(Channel, ResumeBoundToItsFriend) {
    auto world = testkit::make_world(sim::parse_scenario(R"(
peer A net=a
peer B net=b
peer C net=c
capability bulk
service B bulk sink
friend A B
friend B C
)"),
                                     6);
    auto& w = *world;
    w.sim().run_until(1'000);
    w.start_transfer(sim::TransferStep{"t", "A", "B", "bulk", 4u << 20});
    w.sim().run_until(5'000);
    auto& b = w.node("B");
    const auto channels = b.channels().snapshot();
    ASSERT_EQ(channels.size(), 1u);
    auto [probe, server_side] = w.network().make_pipe(sim::LinkProfile{1, 0, 0, 4096});
    EXPECT_EQ(b.channels().handle_resume(w.node("C").identity().id, wire::ReconnectBody{channels[0].id, 0}, server_side),
              ResumeResult::NotYourChannel);
    Rng rng(1);
    EXPECT_EQ(b.channels().handle_resume(w.node("A").identity().id, wire::ReconnectBody{ChannelId::random(rng), 0},
                                         server_side),
              ResumeResult::NoSuchChannel);
    w.sim().run_until(6'000);
    EXPECT_EQ(probe->read(16), (Bytes{wire::encode_verdict(false)}));
    EXPECT_EQ(b.channels().info(channels[0].id)->state, ChannelState::Connected);
}

TEST(Channel, TrickleBeyondWindowWithoutOverflowTearsDown) {
    // 40 s at 256 B/s is 10 KiB, more than the 4 KiB window.
    const auto scenario = sim::parse_scenario(R"(
config channel.window 4096
config channel.overflow 0
peer A net=lan-a
peer B net=lan-b
capability bulk
service B bulk sink
friend A B
at 1s transfer t A B bulk 256KiB
fault detach-during t 50000 B 40s
run-until 200s
expect transfer-failed t
expect count A window-exceeded >= 1
expect count A app-errors >= 1
)");
    const auto result = sim::run_scenario(scenario, 5);
    for (const auto& p : result.predicates) EXPECT_TRUE(p.passed) << p.text << ": " << p.detail;
}

}  // namespace
}  // namespace f2f
