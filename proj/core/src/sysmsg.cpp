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

#include "f2f/sysmsg.hpp"

#include "f2f/node.hpp"
#include "f2f/stream_io.hpp"

#include <algorithm>
#include <memory>

namespace f2f {

const char* to_string(RecoveryOutcome outcome) {
    switch (outcome) {
        case RecoveryOutcome::Recovered: return "recovered";
        case RecoveryOutcome::FallbackStarted: return "fallback-started";
        case RecoveryOutcome::Unrecoverable: return "unrecoverable";
    }
    return "?";
}

const char* to_string(RecoveryPath path) {
    switch (path) {
        case RecoveryPath::MutualFriend: return "mutual-friend";
        case RecoveryPath::Fallback: return "fallback";
    }
    return "?";
}

void Sysmsg::exchange(const PeerId& peer, wire::SystemMessageBody body, TimeMs timeout_ms, ExchangeCallback done) {
    auto& sched = node_.scheduler();
    struct State {
        bool settled = false;
        TimerId timer = 0;
        StreamPtr stream;
        ExchangeCallback done;
    };
    auto state = std::make_shared<State>();
    state->done = std::move(done);
    auto settle = [state, &sched](DialOutcome outcome, std::optional<wire::SystemMessageBody> reply) {
        if (state->settled) return;
        state->settled = true;
        sched.cancel(state->timer);
        if (state->stream) state->stream->close();
        auto cb = std::move(state->done);
        cb(outcome, std::move(reply));
    };
    state->timer = sched.schedule(timeout_ms, [state, settle] {
        if (state->stream) state->stream->abort();
        state->stream.reset();
        settle(DialOutcome::Unreachable, std::nullopt);
    });
    node_.client().dial(peer, std::move(body), false, [state, settle, &sched, timeout_ms](DialResult result) {
        if (state->settled) {
            if (result.stream) result.stream->abort();
            return;
        }
        if (result.outcome != DialOutcome::Accepted) {
            settle(result.outcome, std::nullopt);
            return;
        }
        state->stream = result.stream;
        read_frame(sched, result.stream, timeout_ms, [settle](std::optional<Bytes> frame) {
            std::optional<wire::SystemMessageBody> reply;
            if (frame) {
                try {
                    reply = wire::decode_system_reply(*frame);
                } catch (const wire::WireError&) {
                }
            }
            settle(DialOutcome::Accepted, std::move(reply));
        });
    });
}

void Sysmsg::announce_to_friends(AnnounceCallback done) {
    const auto generation = ++announce_generation_;
    announce_done_ = std::move(done);
    std::vector<PeerId> friends;
    for (const auto& record : node_.contacts().records()) friends.push_back(record.peer_id);
    node_.log("announces " + node_.address().value + " v" + std::to_string(node_.version()) + " to " +
              std::to_string(friends.size()) + " friends");
    announce_next(generation, 0, std::move(friends), {});
}

void Sysmsg::announce_next(std::uint64_t generation, std::size_t index, std::vector<PeerId> friends,
                           std::vector<AnnounceOutcome> outcomes) {
    if (generation != announce_generation_) return;
    if (index == friends.size()) {
        if (announce_done_) {
            auto cb = std::move(announce_done_);
            announce_done_ = nullptr;
            cb(std::move(outcomes));
        }
        return;
    }
    const auto peer = friends[index];
    auto next = [this, generation, index, peer, friends, outcomes](bool ok, std::optional<wire::AckStatus> ack) mutable {
        if (generation != announce_generation_) return;
        const auto now = node_.scheduler().now();
        if (node_.contacts().contains(peer)) {
            node_.contacts().set_status(peer, ok ? OnlineStatus::Online : OnlineStatus::Offline, now);
        }
        node_.log("announce -> " + node_.name_of(peer) + (ok ? " delivered" : " failed"));
        outcomes.push_back(AnnounceOutcome{peer, ok, ack});
        announce_next(generation, index + 1, std::move(friends), std::move(outcomes));
    };
    const auto timeout = node_.config().sysmsg.announce_timeout_ms;
    if (auto it = drop_announce_.find(peer); it != drop_announce_.end()) {
        if (--it->second == 0) drop_announce_.erase(it);
        node_.log("announce -> " + node_.name_of(peer) + " lost in transit");
        node_.scheduler().schedule(timeout, [next]() mutable { next(false, std::nullopt); });
        return;
    }
    wire::AddressAnnounce body{node_.identity().id, node_.address(), node_.version()};
    exchange(peer, body, timeout,
             [next](DialOutcome outcome, std::optional<wire::SystemMessageBody> reply) mutable {
        std::optional<wire::AckStatus> ack;
        if (outcome == DialOutcome::Accepted && reply) {
            if (const auto* a = std::get_if<wire::AnnounceAck>(&*reply)) ack = a->status;
        }
        next(ack.has_value(), ack);
    });
}

wire::AnnounceAck Sysmsg::handle_announce(const PeerId& sender, const wire::AddressAnnounce& body) {
    if (body.origin != sender) {
        node_.log("rejects announce from " + node_.name_of(sender) + ": origin " + body.origin.hex());
        return wire::AnnounceAck{wire::AckStatus::Rejected};
    }
    const auto result = node_.apply_address(sender, body.address, body.version);
    node_.log("announce <- " + node_.name_of(sender) + " v" + std::to_string(body.version) + " " +
              to_string(result));
    switch (result) {
        case ApplyResult::Applied: return wire::AnnounceAck{wire::AckStatus::Applied};
        case ApplyResult::IgnoredStale: return wire::AnnounceAck{wire::AckStatus::IgnoredStale};
        case ApplyResult::UnknownPeer: break;
    }
    return wire::AnnounceAck{wire::AckStatus::Rejected};
}

wire::AddressReply Sysmsg::handle_query(const PeerId& requester, const wire::AddressQuery& query) const {
    wire::AddressReply reply;
    reply.target = query.target;
    const auto* record = node_.contacts().find(query.target);
    if (record && record->knows(requester) && !record->address.empty()) {
        reply.known = true;
        reply.address = record->address;
        reply.version = record->address_version;
    }
    return reply;
}

wire::SystemMessageBody Sysmsg::dispatch(const PeerId& sender, const wire::SystemMessageBody& body) {
    if (const auto* announce = std::get_if<wire::AddressAnnounce>(&body)) {
        return handle_announce(sender, *announce);
    }
    if (const auto* query = std::get_if<wire::AddressQuery>(&body)) {
        auto reply = handle_query(sender, *query);
        node_.log("query <- " + node_.name_of(sender) + " about " + node_.name_of(query->target) +
                  (reply.known ? " answered" : " unknown"));
        return reply;
    }
    if (const auto* reply = std::get_if<wire::FallbackReply>(&body)) {
        const auto result = node_.fallback().handle_response(sender, *reply);
        return wire::AnnounceAck{result.kind == ResponseResult::Kind::Applied ? wire::AckStatus::Applied
                                                                               : wire::AckStatus::Rejected};
    }
    return wire::AnnounceAck{wire::AckStatus::Rejected};
}

void Sysmsg::recover_address(const PeerId& target, RecoveryCallback done) {
    if (auto it = waiters_.find(target); it != waiters_.end()) {
        if (done) it->second.push_back(std::move(done));
        return;
    }
    auto& waiters = waiters_[target];
    if (done) waiters.push_back(std::move(done));

    std::vector<ContactRecord> candidates;
    try {
        candidates = node_.contacts().mutual_friend_candidates(target);
    } catch (const ContactError&) {
        finish_recovery(target, RecoveryOutcome::Unrecoverable);
        return;
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return a.last_contact_time > b.last_contact_time;
    });
    std::vector<PeerId> order;
    std::string names;
    for (const auto& c : candidates) {
        order.push_back(c.peer_id);
        names += (names.empty() ? "" : ",") + c.name;
    }
    node_.log("recovering " + node_.name_of(target) + " via [" + names + "]");
    const auto start_version = node_.contacts().at(target).address_version;
    query_next(target, start_version, std::move(order), 0);
}

void Sysmsg::query_next(const PeerId& target, std::uint64_t start_version, std::vector<PeerId> candidates,
                        std::size_t index) {
    const auto* record = node_.contacts().find(target);
    if (!record) {
        finish_recovery(target, RecoveryOutcome::Unrecoverable);
        return;
    }
    if (record->address_version > start_version) {
        // Someone else (an announce, a fallback reply) refreshed it meanwhile.
        finish_recovery(target, RecoveryOutcome::Recovered);
        return;
    }
    if (index == candidates.size()) {
        if (record->secondary_address.empty()) {
            node_.log("cannot recover " + record->name + ": no mutual friend answered and no phone number");
            finish_recovery(target, RecoveryOutcome::Unrecoverable);
            return;
        }
        node_.fallback().send_request(*record);
        finish_recovery(target, RecoveryOutcome::FallbackStarted);
        return;
    }
    const auto candidate = candidates[index];
    ++queries_sent_;
    node_.log("query -> " + node_.name_of(candidate) + " about " + record->name);
    exchange(candidate, wire::AddressQuery{target}, node_.config().sysmsg.query_timeout_ms,
             [this, target, start_version, candidates, index, candidate](
                 DialOutcome outcome, std::optional<wire::SystemMessageBody> reply) mutable {
        const auto now = node_.scheduler().now();
        if (outcome == DialOutcome::Unreachable && node_.contacts().contains(candidate)) {
            node_.contacts().set_status(candidate, OnlineStatus::Offline, now);
        }
        const auto* answer = reply ? std::get_if<wire::AddressReply>(&*reply) : nullptr;
        const auto* record = node_.contacts().find(target);
        if (answer && answer->known && answer->target == target && record &&
            answer->version > record->address_version) {
            if (node_.apply_address(target, answer->address, answer->version) == ApplyResult::Applied) {
                record_recovery(RecoveryRecord{target, RecoveryPath::MutualFriend, candidate, answer->version, now});
                node_.log("recovered " + node_.name_of(target) + " v" + std::to_string(answer->version) +
                          " via mutual friend " + node_.name_of(candidate));
                finish_recovery(target, RecoveryOutcome::Recovered);
                return;
            }
        }
        query_next(target, start_version, std::move(candidates), index + 1);
    });
}

void Sysmsg::finish_recovery(const PeerId& target, RecoveryOutcome outcome) {
    auto it = waiters_.find(target);
    if (it == waiters_.end()) return;
    auto waiters = std::move(it->second);
    waiters_.erase(it);
    for (auto& cb : waiters) cb(outcome);
}

}  // namespace f2f
