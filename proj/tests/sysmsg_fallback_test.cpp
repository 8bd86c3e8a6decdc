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

#include "f2f/node.hpp"
#include "f2f/scenario.hpp"

#include "testkit.hpp"

#include <gtest/gtest.h>

namespace f2f {
namespace {

constexpr std::string_view kTriangle = R"(
peer A net=a phone=+1
peer B net=b phone=+2
peer C net=c phone=+3
friend A B
friend A C
friend B C
)";

struct TriangleFixture : ::testing::Test {
    std::unique_ptr<sim::World> world = testkit::make_world(sim::parse_scenario(kTriangle), 5);
    sim::World& w = *world;
    Node& a = w.node("A");
    Node& b = w.node("B");
    Node& c = w.node("C");

    void SetUp() override { w.sim().run_until(1'000); }
};

TEST_F(TriangleFixture, AnnounceOutcomes) {
    const auto& b_id = b.identity().id;
    auto ack = a.sysmsg().dispatch(b_id, wire::AddressAnnounce{b_id, OverlayAddress{"b2.ovl"}, 5});
    EXPECT_EQ(std::get<wire::AnnounceAck>(ack).status, wire::AckStatus::Applied);
    ack = a.sysmsg().dispatch(b_id, wire::AddressAnnounce{b_id, OverlayAddress{"b3.ovl"}, 5});
    EXPECT_EQ(std::get<wire::AnnounceAck>(ack).status, wire::AckStatus::IgnoredStale);
    EXPECT_EQ(a.contacts().at(b_id).address.value, "b2.ovl");
    // B may only announce itself.
    ack = a.sysmsg().dispatch(b_id, wire::AddressAnnounce{c.identity().id, OverlayAddress{"c9.ovl"}, 50});
    EXPECT_EQ(std::get<wire::AnnounceAck>(ack).status, wire::AckStatus::Rejected);
    EXPECT_NE(a.contacts().at(c.identity().id).address.value, "c9.ovl");
}

TEST_F(TriangleFixture, QueryAnsweredOnlyForMutualFriends) {
    const auto reply = a.sysmsg().handle_query(c.identity().id, wire::AddressQuery{b.identity().id});
    EXPECT_TRUE(reply.known);
    EXPECT_EQ(reply.address, b.address());
    EXPECT_EQ(reply.version, b.version());

    Rng rng(1);
    const auto stranger = PeerId::random(rng);
    EXPECT_FALSE(a.sysmsg().handle_query(stranger, wire::AddressQuery{b.identity().id}).known);
    EXPECT_FALSE(a.sysmsg().handle_query(c.identity().id, wire::AddressQuery{stranger}).known);
}

TEST_F(TriangleFixture, AnnouncementReachesEveryFriend) {
    std::vector<AnnounceOutcome> outcomes;
    w.attach("B", "train");
    w.sim().run_until(3'000);
    b.sysmsg().announce_to_friends([&](std::vector<AnnounceOutcome> o) { outcomes = std::move(o); });
    w.sim().run_until(30'000);
    ASSERT_EQ(outcomes.size(), 2u);
    for (const auto& o : outcomes) EXPECT_TRUE(o.ok);
    EXPECT_EQ(a.contacts().at(b.identity().id).address, b.address());
    EXPECT_EQ(c.contacts().at(b.identity().id).address_version, b.version());
}

TEST_F(TriangleFixture, RecoveryViaMutualFriend) {
    b.sysmsg().drop_next_announce(c.identity().id);
    w.attach("B", "train");
    w.sim().run_until(40'000);
    ASSERT_NE(c.contacts().at(b.identity().id).address, b.address());

    std::vector<RecoveryOutcome> outcomes;
    c.sysmsg().recover_address(b.identity().id, [&](RecoveryOutcome o) { outcomes.push_back(o); });
    c.sysmsg().recover_address(b.identity().id, [&](RecoveryOutcome o) { outcomes.push_back(o); });
    EXPECT_TRUE(c.sysmsg().recovering(b.identity().id));
    w.sim().run_until(60'000);
    EXPECT_EQ(outcomes, (std::vector<RecoveryOutcome>{RecoveryOutcome::Recovered, RecoveryOutcome::Recovered}));
    EXPECT_EQ(c.sysmsg().queries_sent(), 1u);
    EXPECT_EQ(c.contacts().at(b.identity().id).address, b.address());
    ASSERT_EQ(c.sysmsg().history().size(), 1u);
    EXPECT_EQ(c.sysmsg().history()[0].path, RecoveryPath::MutualFriend);
    EXPECT_EQ(c.sysmsg().history()[0].via, a.identity().id);
}

TEST_F(TriangleFixture, FallbackRequestIsReusedWhileOutstanding) {
    const auto& record = a.contacts().at(b.identity().id);
    const auto first = a.fallback().send_request(record);
    const auto second = a.fallback().send_request(record);
    EXPECT_EQ(first.value, second.value);
    EXPECT_EQ(a.fallback().counters().codes_issued, 1u);
    EXPECT_TRUE(a.contacts().at(b.identity().id).awaiting_answer);

    auto no_phone = record;
    no_phone.secondary_address.clear();
    EXPECT_THROW(a.fallback().send_request(no_phone), FallbackError);
}

TEST_F(TriangleFixture, DuplicateRequestAppliesOnce) {
    wire::FallbackRequest req{a.identity().id, OverlayAddress{"a-new.ovl"}, 9, {}, {}};
    Rng(3).fill(req.code);
    const OobMessage msg{a.phone(), b.phone(), wire::encode_fallback_request(req, a.identity().keys.private_key)};
    const auto r1 = b.fallback().handle_request(msg);
    EXPECT_EQ(r1.kind, RequestResult::Kind::RepliedNow);
    EXPECT_EQ(b.contacts().at(a.identity().id).address.value, "a-new.ovl");

    const auto r2 = b.fallback().handle_request(msg);
    EXPECT_EQ(r2.kind, RequestResult::Kind::Rejected);
    EXPECT_EQ(r2.reason, RejectReason::Duplicate);
    EXPECT_EQ(b.fallback().counters().requests_accepted, 1u);
    EXPECT_EQ(b.fallback().counters().duplicates, 1u);
}

TEST_F(TriangleFixture, RequestRejections) {
    wire::FallbackRequest req{a.identity().id, a.address(), 1, {}, {}};
    const auto good = wire::encode_fallback_request(req, a.identity().keys.private_key);
    auto reason = [&](const OobMessage& m) { return b.fallback().handle_request(m).reason; };
    EXPECT_EQ(reason({"+999", b.phone(), good}), RejectReason::UnknownNumber);
    EXPECT_EQ(reason({c.phone(), b.phone(), good}), RejectReason::AuthFailure);  // C's number, A's id
    EXPECT_EQ(reason({a.phone(), b.phone(), wire::encode_fallback_request(req, c.identity().keys.private_key)}),
              RejectReason::AuthFailure);
    EXPECT_EQ(reason({a.phone(), b.phone(), to_bytes("garbage")}), RejectReason::Malformed);
    EXPECT_EQ(b.fallback().counters().requests_accepted, 0u);
}

TEST_F(TriangleFixture, ReplyQueuedWhileDetached) {
    w.detach("B");
    w.sim().run_until(2'000);
    wire::FallbackRequest req{a.identity().id, a.address(), a.version(), {}, {}};
    Rng(4).fill(req.code);
    // Let A accept the answer as if it had issued the code.
    a.fallback().send_request(a.contacts().at(b.identity().id));
    req.code = a.fallback().outstanding(b.identity().id)->value;
    const auto res = b.fallback().handle_request(
        OobMessage{a.phone(), b.phone(), wire::encode_fallback_request(req, a.identity().keys.private_key)});
    EXPECT_EQ(res.kind, RequestResult::Kind::ReplyQueued);
    EXPECT_TRUE(b.fallback().reply_pending(a.identity().id));

    w.attach("B", "hotel");
    w.sim().run_until(30'000);
    EXPECT_FALSE(b.fallback().reply_pending(a.identity().id));
    EXPECT_EQ(b.fallback().counters().replies_sent, 1u);
    EXPECT_EQ(a.fallback().counters().responses_applied, 1u);
    EXPECT_EQ(a.contacts().at(b.identity().id).address, b.address());
    EXPECT_FALSE(a.contacts().at(b.identity().id).awaiting_answer);
}

TEST_F(TriangleFixture, ResponseNeedsMatchingCode) {
    const auto code = a.fallback().send_request(a.contacts().at(b.identity().id));
    const wire::FallbackReply reply{OverlayAddress{"b-next.ovl"}, 40, code.value};
    // Right code, wrong sender.
    EXPECT_EQ(a.fallback().handle_response(c.identity().id, reply).kind, ResponseResult::Kind::Rejected);
    const auto applied = a.fallback().handle_response(b.identity().id, reply);
    EXPECT_EQ(applied.kind, ResponseResult::Kind::Applied);
    EXPECT_EQ(applied.update, ApplyResult::Applied);
    // Replayed.
    EXPECT_EQ(a.fallback().handle_response(b.identity().id, reply).kind, ResponseResult::Kind::Rejected);
    EXPECT_EQ(a.fallback().consumed_codes().size(), 1u);
}

TEST_F(TriangleFixture, OutstandingRequestReissuedWhenOwnAddressChanges) {
    const auto old = a.fallback().send_request(a.contacts().at(b.identity().id));
    w.attach("A", "roaming");
    w.sim().run_until(5'000);
    const auto now = a.fallback().outstanding(b.identity().id);
    ASSERT_TRUE(now);
    EXPECT_NE(now->value, old.value);
    EXPECT_EQ(a.fallback().counters().codes_issued, 2u);
}

TEST(FallbackSchedules, RandomizedSchedulesHold) {
    std::uint64_t queued = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto run = testkit::run_fallback_schedule(seed);
        queued += run.replies_queued;
        EXPECT_TRUE(run.ok) << "seed " << seed << ": " << (run.failures.empty() ? "" : run.failures.front()) << "\n"
                            << run.detail;
    }
    EXPECT_GE(queued, 40u);
}

TEST(Recovery, OutcomeDependsOnAvailablePaths) {
    // C has only B: no candidates, so its phone is the way. E has neither.
    auto world = testkit::make_world(sim::parse_scenario(R"(
peer B net=b phone=+2
peer C net=c
peer E net=e
friend B C
friend B E
)"),
                                     8);
    auto& w = *world;
    w.node("C").contacts().upsert([&] {
        auto r = w.node("C").contacts().at(w.node("B").identity().id);
        r.secondary_address = "+2";
        return r;
    }());
    std::optional<RecoveryOutcome> c_outcome, e_outcome;
    const auto b_id = w.node("B").identity().id;
    w.node("C").sysmsg().recover_address(b_id, [&](RecoveryOutcome o) { c_outcome = o; });
    w.node("E").contacts().upsert([&] {
        auto r = w.node("E").contacts().at(b_id);
        r.secondary_address.clear();
        return r;
    }());
    w.node("E").sysmsg().recover_address(b_id, [&](RecoveryOutcome o) { e_outcome = o; });
    w.sim().run_until(1'000);
    EXPECT_EQ(c_outcome, RecoveryOutcome::FallbackStarted);
    EXPECT_TRUE(w.node("C").contacts().at(b_id).awaiting_answer);
    EXPECT_EQ(e_outcome, RecoveryOutcome::Unrecoverable);
    EXPECT_EQ(w.messenger().sent_from("+2"), 0u);
}

TEST(Announce, NoFriendsGivesEmptyOutcome) {
    auto world = testkit::make_world(sim::parse_scenario("peer A net=a\n"), 9);
    std::optional<std::vector<AnnounceOutcome>> outcomes;
    world->node("A").sysmsg().announce_to_friends([&](std::vector<AnnounceOutcome> o) { outcomes = std::move(o); });
    world->sim().run_until(1'000);
    ASSERT_TRUE(outcomes);
    EXPECT_TRUE(outcomes->empty());
}

}  // namespace
}  // namespace f2f
