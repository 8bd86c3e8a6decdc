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

#include "f2f/proxy.hpp"
#include "f2f/scenario.hpp"
#include "f2f/sim_network.hpp"
#include "f2f/stream_io.hpp"

#include "testkit.hpp"

#include <gtest/gtest.h>

namespace f2f {
namespace {

TEST(PortAllocator, StableLowestFree) {
    Rng rng(1);
    const auto p1 = PeerId::random(rng);
    const auto p2 = PeerId::random(rng);
    const auto c = CapabilityId::random(rng);
    PortAllocator ports(100, 102);
    EXPECT_EQ(ports.allocate(p1, c).local_port, 100);
    EXPECT_EQ(ports.allocate(p2, c).local_port, 101);
    EXPECT_EQ(ports.allocate(p1, c).local_port, 100);
    EXPECT_EQ(ports.find(101)->friend_id, p2);
    EXPECT_EQ(ports.find(p2, c)->local_port, 101);
    EXPECT_EQ(ports.allocate(p1, CapabilityId::random(rng)).local_port, 102);
    try {
        ports.allocate(PeerId::random(rng), c);
        FAIL();
    } catch (const ProxyError& e) {
        EXPECT_EQ(e.code(), ProxyError::Code::ResourceExhausted);
    }
    EXPECT_THROW(PortAllocator(5, 4), std::invalid_argument);
}

TEST(PortAllocator, SaveLoadRoundTrip) {
    Rng rng(2);
    PortAllocator ports(20000, 20010);
    for (int i = 0; i < 5; ++i) ports.allocate(PeerId::random(rng), CapabilityId::random(rng));
    const auto text = ports.save();
    const auto loaded = PortAllocator::load(text, 20000, 20010);
    EXPECT_EQ(loaded.mappings(), ports.mappings());
    EXPECT_EQ(loaded.save(), text);
    EXPECT_THROW(PortAllocator::load("nope\n", 1, 2), ProxyError);
    EXPECT_THROW(PortAllocator::load(text, 30000, 30010), ProxyError);  // outside the range
}

TEST(NonceTable, FreshOnceWithinLifetime) {
    Rng rng(3);
    NonceTable table(1'000);
    const auto n = table.issue(rng, 0);
    EXPECT_EQ(table.consume(n, 500), NonceCheck::Fresh);
    EXPECT_EQ(table.consume(n, 600), NonceCheck::Reused);
    const auto late = table.issue(rng, 0);
    EXPECT_EQ(table.consume(late, 1'001), NonceCheck::Expired);
    EXPECT_EQ(table.consume(late, 1'002), NonceCheck::Reused);
    EXPECT_EQ(table.consume(n ^ late ^ 0x5a5a5a5a, 10), NonceCheck::Unknown);
}

TEST(NonceTable, PurgesOldEntries) {
    Rng rng(4);
    NonceTable table(100);
    for (int i = 0; i < 10; ++i) table.issue(rng, 0);
    EXPECT_EQ(table.size(), 10u);
    table.issue(rng, 1'000);
    EXPECT_EQ(table.size(), 1u);
}

TEST(Pump, CopiesBothWaysAndPropagatesEof) {
    sim::Simulator s(5);
    sim::SimNetwork net(s, sim::NetworkConfig{});
    const sim::LinkProfile fast{1, 0, 0, 4096};
    auto [app, proxy_app] = net.make_pipe(fast);
    auto [proxy_net, remote] = net.make_pipe(fast);
    std::optional<PumpTotals> totals;
    pump(proxy_app, proxy_net, [&](PumpTotals t) { totals = t; });

    Bytes up(10'000);
    Rng(6).fill(up);
    Bytes received_up, received_down;
    remote->set_on_readable([&] {
        auto b = remote->read(1 << 20);
        received_up.insert(received_up.end(), b.begin(), b.end());
        if (remote->at_eof()) {
            remote->write(Bytes(300, 2));
            remote->shutdown_write();
        }
    });
    app->set_on_readable([&] {
        auto b = app->read(1 << 20);
        received_down.insert(received_down.end(), b.begin(), b.end());
    });
    write_all(app, up, [&](bool) { app->shutdown_write(); });
    s.run_until(10'000);
    EXPECT_EQ(received_up, up);
    EXPECT_EQ(received_down, Bytes(300, 2));
    ASSERT_TRUE(totals);
    EXPECT_EQ(totals->a_to_b, up.size());
    EXPECT_EQ(totals->b_to_a, 300u);
}

class AuthMatrix : public ::testing::TestWithParam<testkit::AuthCase> {};

TEST_P(AuthMatrix, VerdictAndServiceContact) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto out = testkit::run_auth_case(GetParam(), seed);
        EXPECT_TRUE(out.as_expected(GetParam()))
            << testkit::to_string(GetParam()) << " / " << out.variant << " seed " << seed << " verdict "
            << (out.verdict ? static_cast<int>(*out.verdict) : -1) << " accepts " << out.service_accepts;
    }
}

INSTANTIATE_TEST_SUITE_P(Cases, AuthMatrix,
                         ::testing::Values(testkit::AuthCase::Healthy, testkit::AuthCase::UnknownPeer,
                                           testkit::AuthCase::BadSignature, testkit::AuthCase::StaleNonce,
                                           testkit::AuthCase::ReplayedNonce,
                                           testkit::AuthCase::UnregisteredCapability));

constexpr std::string_view kPair = R"(
peer A net=a
peer B net=b
capability svc
service B svc echo
friend A B
)";

TEST(ClientProxy, UnreachableFriendIsLatchedUntilAnnounce) {
    auto world = testkit::make_world(sim::parse_scenario(kPair), 1);
    auto& w = *world;
    auto& a = w.node("A");
    const auto b_id = w.node("B").identity().id;
    w.sim().run_until(1'000);

    // B moves silently: A's dial fails and latches.
    w.node("B").sysmsg().drop_next_announce(a.identity().id);
    w.attach("B", "elsewhere");
    w.sim().run_until(30'000);
    std::optional<DialOutcome> first, second;
    a.client().dial(b_id, wire::ApplicationBody{w.capability("svc"), {}}, true,
                    [&](DialResult r) { first = r.outcome; });
    w.sim().run_until(40'000);
    EXPECT_EQ(first, DialOutcome::Unreachable);
    EXPECT_TRUE(a.client().latched(b_id));
    EXPECT_FALSE(a.contacts().at(b_id).online());

    const auto connects = a.client().transport_connects(b_id);
    a.client().dial(b_id, wire::ApplicationBody{w.capability("svc"), {}}, true,
                    [&](DialResult r) { second = r.outcome; });
    w.sim().run_until(41'000);
    EXPECT_EQ(second, DialOutcome::Latched);
    EXPECT_EQ(a.client().transport_connects(b_id), connects);

    // The next announce clears the latch.
    w.announce("B");
    w.sim().run_until(60'000);
    EXPECT_FALSE(a.client().latched(b_id));
    EXPECT_TRUE(a.contacts().at(b_id).online());
}

TEST(ClientProxy, DialOvertakenByAnnounceDoesNotLatch) {
    auto world = testkit::make_world(sim::parse_scenario(kPair), 4);
    auto& w = *world;
    auto& a = w.node("A");
    const auto b_id = w.node("B").identity().id;
    w.sim().run_until(1'000);
    w.attach("B", "elsewhere");  // the announce reaches A about 900 ms later
    w.sim().run_until(1'500);
    ASSERT_EQ(a.contacts().at(b_id).address_version, 1u);
    std::optional<DialOutcome> outcome;
    a.client().dial(b_id, wire::ApplicationBody{w.capability("svc"), {}}, true,
                    [&](DialResult r) { outcome = r.outcome; });
    w.sim().run_until(10'000);
    EXPECT_EQ(outcome, DialOutcome::Unreachable);
    EXPECT_EQ(a.contacts().at(b_id).address_version, 2u);
    EXPECT_FALSE(a.client().latched(b_id));
    EXPECT_TRUE(a.contacts().at(b_id).online());
}

TEST(ClientProxy, EchoSessionThroughLocalPort) {
    auto world = testkit::make_world(sim::parse_scenario(kPair), 2);
    auto& w = *world;
    w.sim().run_until(1'000);
    auto stream = w.open_app_stream("A", "B", "svc");
    ASSERT_TRUE(stream);
    Bytes echoed;
    stream->set_on_readable([&] {
        auto b = stream->read(1 << 20);
        echoed.insert(echoed.end(), b.begin(), b.end());
    });
    write_all(stream, to_bytes("ping"), [](bool) {});
    w.sim().run_until(10'000);
    EXPECT_EQ(echoed, to_bytes("ping"));
    EXPECT_EQ(w.node("A").client().connect_times().size(), 1u);
    EXPECT_EQ(w.node("A").client().connect_times()[0], 1'200u);
    EXPECT_EQ(w.counter("B", "accepted"), 1u);
}

TEST(Node, DuplicateServiceRejected) {
    auto world = testkit::make_world(sim::parse_scenario(kPair), 3);
    try {
        world->node("B").register_service(world->capability("svc"), 9000);
        FAIL();
    } catch (const ProxyError& e) {
        EXPECT_EQ(e.code(), ProxyError::Code::DuplicateService);
    }
}

TEST(ClientProxy, PortNeedsAnAdvertisedCapability) {
    auto world = testkit::make_world(sim::parse_scenario(kPair), 5);
    auto& a = world->node("A");
    const auto b_id = world->node("B").identity().id;
    const auto mapping = a.client().open_client_port(b_id, world->capability("svc"));
    EXPECT_EQ(mapping.friend_id, b_id);
    EXPECT_GE(mapping.local_port, a.config().proxy.port_low);
    EXPECT_LE(mapping.local_port, a.config().proxy.port_high);
    EXPECT_EQ(a.client().open_client_port(b_id, world->capability("svc")), mapping);
    Rng rng(1);
    try {
        a.client().open_client_port(b_id, CapabilityId::random(rng));
        FAIL();
    } catch (const ProxyError& e) {
        EXPECT_EQ(e.code(), ProxyError::Code::CapabilityUnknown);
    }
}

}  // namespace
}  // namespace f2f
