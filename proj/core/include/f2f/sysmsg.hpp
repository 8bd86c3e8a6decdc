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

#include "f2f/identity.hpp"
#include "f2f/proxy.hpp"
#include "f2f/wire.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace f2f {

class Node;

enum class RecoveryOutcome { Recovered, FallbackStarted, Unrecoverable };
enum class RecoveryPath { MutualFriend, Fallback };

const char* to_string(RecoveryOutcome outcome);
const char* to_string(RecoveryPath path);

struct AnnounceOutcome {
    PeerId peer;
    bool ok = false;
    std::optional<wire::AckStatus> ack;

    bool operator==(const AnnounceOutcome&) const = default;
};

/// A completed address recovery.
struct RecoveryRecord {
    PeerId target;
    RecoveryPath path = RecoveryPath::MutualFriend;
    std::optional<PeerId> via;  // the answering friend for MutualFriend
    std::uint64_t version = 0;
    TimeMs at = 0;
};

/// Address announcements, mutual-friend queries and recovery orchestration.
class Sysmsg {
public:
    using AnnounceCallback = std::function<void(std::vector<AnnounceOutcome>)>;
    using RecoveryCallback = std::function<void(RecoveryOutcome)>;
    using ExchangeCallback = std::function<void(DialOutcome, std::optional<wire::SystemMessageBody>)>;

    explicit Sysmsg(Node& node) : node_(node) {}

    /// Sends the current (address, version) to every friend, one at a time.
    /// A newer call supersedes a fan-out still in progress.
    void announce_to_friends(AnnounceCallback done = {});

    wire::AnnounceAck handle_announce(const PeerId& sender, const wire::AddressAnnounce& body);
    [[nodiscard]] wire::AddressReply handle_query(const PeerId& requester, const wire::AddressQuery& query) const;

    /// At most one recovery per target runs at a time; later callers join it.
    void recover_address(const PeerId& target, RecoveryCallback done = {});
    [[nodiscard]] bool recovering(const PeerId& target) const { return waiters_.contains(target); }

    /// Server-side entry point for an authenticated system message. Returns
    /// the reply to frame back to the sender.
    wire::SystemMessageBody dispatch(const PeerId& sender, const wire::SystemMessageBody& body);

    /// One system message and its reply, bounded by `timeout_ms` overall.
    /// Never latches the friend.
    void exchange(const PeerId& peer, wire::SystemMessageBody body, TimeMs timeout_ms, ExchangeCallback done);

    /// Loses the next announce toward `to` (fault injection).
    void drop_next_announce(const PeerId& to) { ++drop_announce_[to]; }

    void record_recovery(RecoveryRecord record) { history_.push_back(std::move(record)); }
    [[nodiscard]] const std::vector<RecoveryRecord>& history() const { return history_; }
    [[nodiscard]] std::uint64_t queries_sent() const { return queries_sent_; }

private:
    void announce_next(std::uint64_t generation, std::size_t index, std::vector<PeerId> friends,
                       std::vector<AnnounceOutcome> outcomes);
    void query_next(const PeerId& target, std::uint64_t start_version, std::vector<PeerId> candidates,
                    std::size_t index);
    void finish_recovery(const PeerId& target, RecoveryOutcome outcome);

    Node& node_;
    std::uint64_t announce_generation_ = 0;
    AnnounceCallback announce_done_;
    std::map<PeerId, std::vector<RecoveryCallback>> waiters_;
    std::map<PeerId, std::uint64_t> drop_announce_;
    std::vector<RecoveryRecord> history_;
    std::uint64_t queries_sent_ = 0;
};

}  // namespace f2f
