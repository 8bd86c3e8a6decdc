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

#include "f2f/contacts.hpp"
#include "f2f/messenger.hpp"
#include "f2f/runtime.hpp"
#include "f2f/wire.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>

namespace f2f {

class Node;

struct OneTimeCode {
    wire::OneTimeCodeValue value{};
    PeerId issued_to;
    TimeMs issued_at = 0;

    bool operator==(const OneTimeCode&) const = default;
};

class FallbackError : public std::runtime_error {
public:
    enum class Code { FallbackUnavailable };

    FallbackError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] Code code() const { return code_; }

private:
    Code code_;
};

enum class RejectReason { UnknownNumber, AuthFailure, Duplicate, Malformed, CodeMismatch };

const char* to_string(RejectReason reason);

struct RequestResult {
    enum class Kind { RepliedNow, ReplyQueued, Rejected };
    Kind kind = Kind::Rejected;
    std::optional<RejectReason> reason;

    bool operator==(const RequestResult&) const = default;
};

struct ResponseResult {
    enum class Kind { Applied, Rejected };
    Kind kind = Kind::Rejected;
    std::optional<RejectReason> reason;
    std::optional<ApplyResult> update;  // the directory outcome when Applied

    bool operator==(const ResponseResult&) const = default;
};

struct FallbackCounters {
    std::uint64_t requests_sent = 0;    // messenger sends, resends included
    std::uint64_t codes_issued = 0;
    std::uint64_t requests_handled = 0;
    std::uint64_t requests_accepted = 0;  // passed every check; side effects applied
    std::uint64_t duplicates = 0;
    std::uint64_t replies_queued = 0;
    std::uint64_t replies_sent = 0;     // replies acknowledged by the requester
    std::uint64_t responses_applied = 0;
    std::uint64_t responses_rejected = 0;
};

/// Out-of-band address request protocol.
class Fallback {
public:
    explicit Fallback(Node& node);

    /// Sends a signed request carrying our own address to the target's
    /// phone, or returns the unexpired code already outstanding for it.
    OneTimeCode send_request(const ContactRecord& target);

    RequestResult handle_request(const OobMessage& message);
    ResponseResult handle_response(const PeerId& sender, const wire::FallbackReply& body);

    /// Called after (re)attachment. Requests still awaiting an answer are
    /// reissued when our address changed; queued replies are retried.
    void on_attached(bool address_changed);
    /// Called when a friend's address was applied; retries its queued reply.
    void on_peer_address(const PeerId& peer);

    [[nodiscard]] std::optional<OneTimeCode> outstanding(const PeerId& target) const;
    [[nodiscard]] bool reply_pending(const PeerId& peer) const { return pending_replies_.contains(peer); }
    [[nodiscard]] const FallbackCounters& counters() const { return counters_; }
    /// Codes that completed a response, in order.
    [[nodiscard]] const std::vector<wire::OneTimeCodeValue>& consumed_codes() const { return consumed_; }

private:
    struct Outstanding {
        OneTimeCode code;
        Bytes payload;
    };

    OneTimeCode issue(const ContactRecord& target);
    void schedule_resend(const PeerId& target, const wire::OneTimeCodeValue& code);
    void send_reply(const PeerId& peer, const wire::OneTimeCodeValue& code);
    [[nodiscard]] bool expired(const OneTimeCode& code) const;

    Node& node_;
    std::map<PeerId, Outstanding> latest_;                   // newest request per target
    std::map<wire::OneTimeCodeValue, OneTimeCode> codes_;    // every live code
    std::set<std::pair<PeerId, wire::OneTimeCodeValue>> seen_;
    std::map<PeerId, wire::OneTimeCodeValue> pending_replies_;
    std::vector<wire::OneTimeCodeValue> consumed_;
    FallbackCounters counters_;
};

}  // namespace f2f
